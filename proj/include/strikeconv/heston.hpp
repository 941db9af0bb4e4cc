#pragma once

// Vanilla pricing for one leg of the shared-volatility (1V2L) Heston model,
// smile construction and at-the-money level/skew measurement.

#include <complex>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace strikeconv {

/// CIR variance dv = kappa (theta - v) dt + nu sqrt(v) dZ with v_0 = sigma0^2.
/// The Feller condition is not required.
struct HestonParams {
    double kappa = 1.5;
    double theta = 0.15;
    double nu = 0.5;
    double sigma0 = 0.15;

    void validate() const;
};

/// One asset of the 1V2L model: sigma^i_t = lambda * sigma_t.
struct AssetSpec {
    double lambda = 1.0;
    double rho_sv = 0.0;  ///< correlation between the asset and the variance driver
    double s0 = 100.0;

    void validate() const;
};

/// ATM implied-volatility levels and log-strike skews of both legs.
struct SmileObservables {
    double atm_level_x = 0.0;
    double atm_level_y = 0.0;
    double atm_skew_x = 0.0;
    double atm_skew_y = 0.0;
    double maturity = 0.0;
};

/// The variance lambda^2 sigma_t^2 of a scaled leg is again CIR with
/// (kappa, lambda^2 theta, lambda nu) and initial vol lambda sigma0.
HestonParams effective_heston(const HestonParams& model, const AssetSpec& asset);

/// E[exp(i u ln(S_T / S_0))] for complex u, zero rates, "little trap" branch.
std::complex<double> heston_characteristic(std::complex<double> u, double maturity,
                                           const HestonParams& params, double rho_sv);

/// Largest/smallest finite moment p of S_T/S_0 at this maturity:
/// E[(S_T/S_0)^p] < inf for p in (lower, upper).
struct MomentBounds {
    double lower = 0.0;
    double upper = 1.0;
};
MomentBounds heston_moment_bounds(double maturity, const HestonParams& params, double rho_sv);

enum class OptionKind { call, put };

/// European option price under (effective) Heston params with zero rates.
///
/// Out-of-the-money options are integrated directly with a damped Fourier
/// integrand whose damping exponent minimises the integrand bound inside the
/// moment strip; in-the-money prices come from put-call parity. This keeps
/// full relative precision on tiny wing prices.
///
/// Throws InputError on invalid inputs and NumericalError (with the strike,
/// maturity, damping and truncation in the message) if the quadrature does
/// not converge.
double heston_vanilla_price(const HestonParams& params, double rho_sv, double s0, double strike,
                            double maturity, OptionKind kind = OptionKind::call);

/// Price of whichever of call/put is out of the money (put for strike < s0).
double heston_otm_price(const HestonParams& params, double rho_sv, double s0, double strike,
                        double maturity);

/// Black-Scholes implied vol of the Heston price at one strike, inverted from
/// the out-of-the-money side.
double heston_implied_vol(const HestonParams& model, const AssetSpec& asset, double strike,
                          double maturity);

struct SmilePoint {
    double log_strike = 0.0;
    double implied_vol = 0.0;
};

/// An implied-vol smile on a log-strike grid with monotone cubic (PCHIP)
/// interpolation and flat extrapolation beyond the end points.
class Smile {
    struct Interpolant;

public:
    Smile() = default;
    Smile(std::string label, double maturity, double log_spot, std::vector<SmilePoint> points);

    double vol_at(double log_strike) const;

    const std::vector<SmilePoint>& points() const { return points_; }
    const std::string& label() const { return label_; }
    double maturity() const { return maturity_; }
    double log_spot() const { return log_spot_; }
    bool empty() const { return points_.empty(); }

private:
    std::string label_;
    double maturity_ = 0.0;
    double log_spot_ = 0.0;
    std::vector<SmilePoint> points_;
    std::shared_ptr<const Interpolant> interp_;
};

/// Implied-vol smile of one leg at the given log strikes. Strikes must lie in
/// [0.6 s0, 1.4 s0]. Points are priced in parallel over `jobs` workers; any
/// pricing or inversion failure is rethrown with the offending strike.
Smile build_smile(const HestonParams& model, const AssetSpec& asset, double maturity,
                  std::vector<double> log_strikes, std::string label = {}, int jobs = 1);

/// Default experiment grid: `count` log strikes evenly spaced in log-moneyness
/// over [ln 0.7, ln 1.3] around ln s0.
std::vector<double> default_log_strike_grid(double s0, int count = 41);

struct SkewMeasurement {
    double log_strike_step = 0.01;  ///< central difference half-width in log strike
};

/// ATM level I(k = ln s0) and skew (I(k + dz) - I(k - dz)) / (2 dz) of both legs.
SmileObservables measure_atm_observables(const HestonParams& model, const AssetSpec& asset_x,
                                         const AssetSpec& asset_y, double maturity,
                                         const SkewMeasurement& how = {});

/// Writes `asset,T,log_strike,strike,implied_vol` rows (with header when
/// `header` is set).
void write_smile_csv(std::ostream& os, const Smile& smile, bool header = true);

}  // namespace strikeconv
