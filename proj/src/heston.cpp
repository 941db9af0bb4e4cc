#include "strikeconv/heston.hpp"

#include <algorithm>
#include <math.h>  // boost 1.74 pchip calls unqualified isnan

#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

#include "strikeconv/blackscholes.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/parallel.hpp"
#include "strikeconv/quadrature.hpp"

namespace strikeconv {

using cplx = std::complex<double>;

void HestonParams::validate() const {
    for (double v : {kappa, theta, nu, sigma0}) {
        if (!std::isfinite(v) || !(v > 0.0)) {
            throw InputError("heston: kappa, theta, nu and sigma0 must be positive and finite");
        }
    }
}

void AssetSpec::validate() const {
    if (!std::isfinite(lambda) || !(lambda > 0.0)) throw InputError("asset: lambda must be > 0");
    if (!std::isfinite(rho_sv) || rho_sv < -1.0 || rho_sv > 1.0) {
        throw InputError("asset: rho_sv outside [-1, 1]");
    }
    if (!std::isfinite(s0) || !(s0 > 0.0)) throw InputError("asset: s0 must be > 0");
}

HestonParams effective_heston(const HestonParams& model, const AssetSpec& asset) {
    model.validate();
    asset.validate();
    const double l = asset.lambda;
    return HestonParams{model.kappa, l * l * model.theta, l * model.nu, l * model.sigma0};
}

namespace {

// log(1 + z) that stays accurate for tiny |z|.
cplx log1p_c(cplx z) {
    if (std::abs(z) < 1e-4) {
        return z * (1.0 - z * (0.5 - z * (1.0 / 3.0 - 0.25 * z)));
    }
    return std::log(1.0 + z);
}

}  // namespace

cplx heston_characteristic(cplx u, double maturity, const HestonParams& p, double rho_sv) {
    const cplx i(0.0, 1.0);
    const double nu2 = p.nu * p.nu;
    const double v0 = p.sigma0 * p.sigma0;
    const cplx iu = i * u;
    const cplx s = iu + u * u;
    const cplx b = p.kappa - rho_sv * p.nu * iu;
    const cplx d = std::sqrt(b * b + nu2 * s);
    const cplx bpd = b + d;
    // (b - d) / nu^2 = -s / (b + d), written without the cancellation in b - d.
    const cplx bmd_over_nu2 = (std::abs(bpd) > 1e-300) ? -s / bpd : (b - d) / nu2;
    const cplx g = bmd_over_nu2 * nu2 / bpd;
    const cplx e = std::exp(-d * maturity);
    const cplx dterm = bmd_over_nu2 * (1.0 - e) / (1.0 - g * e);
    cplx log_ratio;
    if (std::abs(g) < 1e-4) {
        log_ratio = log1p_c(-g * e) - log1p_c(-g);
    } else {
        log_ratio = std::log((1.0 - g * e) / (1.0 - g));
    }
    const cplx cterm = p.kappa * p.theta * (bmd_over_nu2 * maturity - 2.0 * log_ratio / nu2);
    return std::exp(cterm + dterm * v0);
}

namespace {

// Moment explosion time for E[(S_T/S_0)^w] (Andersen-Piterbarg).
double explosion_time(double w, const HestonParams& p, double rho) {
    if (w >= 0.0 && w <= 1.0) return std::numeric_limits<double>::infinity();
    const double eps = p.nu;
    const double chi = rho * eps * w - p.kappa;
    const double delta = chi * chi - eps * eps * (w * w - w);
    if (delta >= 0.0) {
        if (chi < 0.0) return std::numeric_limits<double>::infinity();
        const double sq = std::sqrt(delta);
        if (sq == 0.0) return 2.0 / chi;
        return std::log((chi + sq) / (chi - sq)) / sq;
    }
    const double sq = std::sqrt(-delta);
    const double base = (chi == 0.0) ? 0.5 * std::numbers::pi : std::atan(sq / chi);
    return 2.0 / sq * ((chi < 0.0 ? std::numbers::pi : 0.0) + base);
}

constexpr double kMomentCap = 60.0;

}  // namespace

MomentBounds heston_moment_bounds(double maturity, const HestonParams& p, double rho_sv) {
    auto finite_at = [&](double w) { return explosion_time(w, p, rho_sv) > maturity; };
    auto search = [&](double inside, double sign) {
        double outside = inside + sign;
        while (finite_at(outside) && std::abs(outside) < kMomentCap) outside += sign * std::abs(outside);
        if (finite_at(outside)) return sign > 0 ? kMomentCap : -kMomentCap;
        for (int it = 0; it < 200 && std::abs(outside - inside) > 1e-10; ++it) {
            const double mid = 0.5 * (inside + outside);
            (finite_at(mid) ? inside : outside) = mid;
        }
        return inside;
    };
    return MomentBounds{search(0.0, -1.0), search(1.0, 1.0)};
}

namespace {

// Price / s0 of the out-of-the-money option at log-moneyness m = ln(K / s0)
// through the damped transform
//   e^{-alpha m} / pi * int_0^inf Re[e^{-i v m} phi(v - (alpha+1) i) / ((alpha + i v)(alpha + 1 + i v))] dv
// which is the call for alpha > 0 and the put for alpha < -1.
double otm_price_normalised(const HestonParams& p, double rho, double m, double maturity) {
    const bool call_side = m >= 0.0;
    const MomentBounds mb = heston_moment_bounds(maturity, p, rho);

    auto log_mgf = [&](double w) {
        return std::log(std::real(heston_characteristic(cplx(0.0, -w), maturity, p, rho)));
    };
    // Bound on the integrand at v = 0; convex in alpha on the strip.
    auto psi = [&](double alpha) {
        return -alpha * m + log_mgf(alpha + 1.0) - std::log(std::abs(alpha * (alpha + 1.0)));
    };

    double lo;
    double hi;
    if (call_side) {
        lo = 1e-3;
        hi = std::min(mb.upper - 1.0, kMomentCap);
    } else {
        lo = std::max(mb.lower - 1.0, -kMomentCap);
        hi = -1.0 - 1e-3;
    }
    const double margin = 0.02 * (hi - lo);
    lo += margin;
    hi -= margin;
    if (!(hi > lo)) throw NumericalError("heston: empty damping strip");

    // Golden-section search for the damping exponent.
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = psi(c);
    double fd = psi(d);
    for (int it = 0; it < 80 && (b - a) > 1e-6 * (1.0 + std::abs(a)); ++it) {
        if (!(fc >= fd)) {  // NaN on the left pushes the search right
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = psi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = psi(d);
        }
    }
    const double alpha = 0.5 * (a + b);

    const cplx i(0.0, 1.0);
    auto integrand_parts = [&](double v, double& envelope) {
        const cplx phi = heston_characteristic(cplx(v, -(alpha + 1.0)), maturity, p, rho);
        const cplx denom = (alpha + i * v) * (alpha + 1.0 + i * v);
        const cplx val = phi / denom;
        envelope = std::abs(val);
        return std::real(std::exp(-i * (v * m)) * val);
    };
    double env0 = 0.0;
    integrand_parts(0.0, env0);
    if (!std::isfinite(env0) || env0 <= 0.0) {
        throw NumericalError("heston: non-finite transform at damping " + std::to_string(alpha));
    }

    // Truncate where the envelope tail is negligible; beyond V the envelope
    // decays at least like 1/v^2 so the tail is below env(V) * V.
    const double tail_tol = 1e-13 * env0;
    double upper = 1.0;
    for (;;) {
        double env = 0.0;
        integrand_parts(upper, env);
        double env2 = 0.0;
        integrand_parts(2.0 * upper, env2);
        if (env * upper < tail_tol && env2 * 2.0 * upper < tail_tol) break;
        upper *= 2.0;
        if (upper > 1e8) throw NumericalError("heston: transform does not decay");
    }

    auto f = [&](double v) {
        double env = 0.0;
        return integrand_parts(v, env);
    };
    // Panels that hit the depth cap are accepted when the summed error is still
    // at the roundoff level of the integrand.
    const double abs_tol = 1e-12 * env0;
    const QuadratureResult q = integrate_adaptive(f, 0.0, upper, abs_tol, 32, 20);
    if (!std::isfinite(q.value) || q.error_estimate > 10.0 * abs_tol) {
        std::ostringstream msg;
        msg << "heston: quadrature did not converge (m=" << m << ", T=" << maturity
            << ", alpha=" << alpha << ", upper=" << upper << ", err=" << q.error_estimate << ")";
        throw NumericalError(msg.str());
    }
    const double value = std::exp(-alpha * m) / std::numbers::pi * q.value;
    return std::max(value, 0.0);
}

void validate_vanilla(const HestonParams& params, double rho_sv, double s0, double strike,
                      double maturity) {
    params.validate();
    if (!std::isfinite(rho_sv) || rho_sv < -1.0 || rho_sv > 1.0) {
        throw InputError("heston: rho_sv outside [-1, 1]");
    }
    if (!std::isfinite(s0) || !(s0 > 0.0)) throw InputError("heston: s0 must be > 0");
    if (!std::isfinite(strike) || !(strike > 0.0)) throw InputError("heston: strike must be > 0");
    if (!std::isfinite(maturity) || !(maturity > 0.0)) {
        throw InputError("heston: maturity must be > 0");
    }
}

}  // namespace

double heston_otm_price(const HestonParams& params, double rho_sv, double s0, double strike,
                        double maturity) {
    validate_vanilla(params, rho_sv, s0, strike, maturity);
    return s0 * otm_price_normalised(params, rho_sv, std::log(strike / s0), maturity);
}

double heston_vanilla_price(const HestonParams& params, double rho_sv, double s0, double strike,
                            double maturity, OptionKind kind) {
    const double otm = heston_otm_price(params, rho_sv, s0, strike, maturity);
    const bool otm_is_call = strike >= s0;
    const bool want_call = kind == OptionKind::call;
    if (otm_is_call == want_call) return otm;
    // Parity with zero rates: C - P = s0 - K.
    return want_call ? otm + (s0 - strike) : otm - (s0 - strike);
}

double heston_implied_vol(const HestonParams& model, const AssetSpec& asset, double strike,
                          double maturity) {
    const HestonParams eff = effective_heston(model, asset);
    const double time_value = heston_otm_price(eff, asset.rho_sv, asset.s0, strike, maturity);
    // The call's time value equals the out-of-the-money option's price.
    return implied_vol_from_time_value(time_value, 0.0, maturity, std::log(asset.s0),
                                       std::log(strike));
}

struct Smile::Interpolant {
    boost::math::interpolators::pchip<std::vector<double>> curve;
};

Smile::Smile(std::string label, double maturity, double log_spot, std::vector<SmilePoint> points)
    : label_(std::move(label)), maturity_(maturity), log_spot_(log_spot), points_(std::move(points)) {
    std::sort(points_.begin(), points_.end(),
              [](const SmilePoint& a, const SmilePoint& b) { return a.log_strike < b.log_strike; });
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].log_strike > points_[i - 1].log_strike)) {
            throw InputError("smile: duplicate log strikes");
        }
    }
    if (points_.size() >= 4) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& p : points_) {
            xs.push_back(p.log_strike);
            ys.push_back(p.implied_vol);
        }
        interp_ = std::make_shared<const Interpolant>(
            Interpolant{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs),
                                                                               std::move(ys))});
    }
}

double Smile::vol_at(double log_strike) const {
    if (points_.empty()) throw InputError("smile: no points");
    if (!std::isfinite(log_strike)) throw InputError("smile: non-finite log strike");
    if (log_strike <= points_.front().log_strike) return points_.front().implied_vol;
    if (log_strike >= points_.back().log_strike) return points_.back().implied_vol;
    if (interp_) return interp_->curve(log_strike);
    // Too few points for a cubic: linear interpolation.
    const auto hi = std::upper_bound(points_.begin(), points_.end(), log_strike,
                                     [](double z, const SmilePoint& p) { return z < p.log_strike; });
    const auto lo = hi - 1;
    const double w = (log_strike - lo->log_strike) / (hi->log_strike - lo->log_strike);
    return lo->implied_vol + w * (hi->implied_vol - lo->implied_vol);
}

Smile build_smile(const HestonParams& model, const AssetSpec& asset, double maturity,
                  std::vector<double> log_strikes, std::string label, int jobs) {
    asset.validate();
    model.validate();
    const double log_s0 = std::log(asset.s0);
    const double lo = std::log(0.6 * asset.s0) - 1e-12;
    const double hi = std::log(1.4 * asset.s0) + 1e-12;
    for (double z : log_strikes) {
        if (!std::isfinite(z) || z < lo || z > hi) {
            throw InputError("build_smile: log strike " + std::to_string(z) +
                             " outside [0.6 s0, 1.4 s0]");
        }
    }
    std::sort(log_strikes.begin(), log_strikes.end());
    std::vector<SmilePoint> pts(log_strikes.size());
    parallel_for(log_strikes.size(), jobs, [&](std::size_t idx) {
        const double z = log_strikes[idx];
        try {
            pts[idx] = SmilePoint{z, heston_implied_vol(model, asset, std::exp(z), maturity)};
        } catch (const std::exception& e) {
            throw NumericalError("build_smile: strike " + std::to_string(std::exp(z)) + " (T=" +
                                 std::to_string(maturity) + "): " + e.what());
        }
    });
    return Smile(std::move(label), maturity, log_s0, std::move(pts));
}

std::vector<double> default_log_strike_grid(double s0, int count) {
    if (count < 2) throw InputError("strike grid needs at least two points");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double lo = std::log(0.7);
    const double hi = std::log(1.3);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::log(s0) + lo + (hi - lo) * i / (count - 1);
    }
    return out;
}

SmileObservables measure_atm_observables(const HestonParams& model, const AssetSpec& asset_x,
                                         const AssetSpec& asset_y, double maturity,
                                         const SkewMeasurement& how) {
    const double dz = how.log_strike_step;
    if (!std::isfinite(dz) || !(dz > 0.0)) throw InputError("skew step must be > 0");
    auto level_and_skew = [&](const AssetSpec& a, double& level, double& skew) {
        level = heston_implied_vol(model, a, a.s0, maturity);
        const double up = heston_implied_vol(model, a, a.s0 * std::exp(dz), maturity);
        const double dn = heston_implied_vol(model, a, a.s0 * std::exp(-dz), maturity);
        skew = (up - dn) / (2.0 * dz);
    };
    SmileObservables obs;
    obs.maturity = maturity;
    level_and_skew(asset_x, obs.atm_level_x, obs.atm_skew_x);
    level_and_skew(asset_y, obs.atm_level_y, obs.atm_skew_y);
    return obs;
}

void write_smile_csv(std::ostream& os, const Smile& smile, bool header) {
    if (header) os << "asset,T,log_strike,strike,implied_vol\n";
    const auto old_precision = os.precision(17);
    for (const auto& p : smile.points()) {
        os << smile.label() << ',' << smile.maturity() << ',' << p.log_strike << ','
           << std::exp(p.log_strike) << ',' << p.implied_vol << '\n';
    }
    os.precision(old_precision);
}

}  // namespace strikeconv
