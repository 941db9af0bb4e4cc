#pragma once

// Monte Carlo for the 1V2L model: one CIR variance shared by two lognormal
// assets with correlated drivers (W^X, W^Y, Z).

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "strikeconv/heston.hpp"

namespace strikeconv {

struct CorrelationStructure {
    double rho = 0.0;    ///< corr(W^X, W^Y)
    double rho_x = 0.0;  ///< corr(W^X, Z)
    double rho_y = 0.0;  ///< corr(W^Y, Z)
};

struct CorrelationCheck {
    bool valid = false;
    double determinant = 0.0;
};

/// Positive semi-definiteness of the 3x3 correlation matrix: the determinant
/// 1 + 2 rho rho_X rho_Y - rho^2 - rho_X^2 - rho_Y^2 and all 2x2 principal
/// minors must be non-negative. Entries outside [-1, 1] throw InputError.
CorrelationCheck validate_correlation(const CorrelationStructure& c);

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Lower-triangular L with L L^T equal to the correlation matrix in the order
/// (W^X, W^Y, Z). Pivots below 1e-12 are treated as zero, so rank-deficient
/// matrices get zero columns. Non-PSD input throws DomainError.
Matrix3 cholesky3(const CorrelationStructure& c);

/// Both legs of the 1V2L model.
struct TwoAssetModel {
    HestonParams heston;
    AssetSpec x{1.5, -0.4, 100.0};
    AssetSpec y{1.0, -0.6, 100.0};
    double rho = 0.5;

    CorrelationStructure correlations() const { return {rho, x.rho_sv, y.rho_sv}; }
    /// sigma0 sqrt(lambda_X^2 + lambda_Y^2 - 2 rho lambda_X lambda_Y).
    double exchange_spot_vol() const;
    void validate() const;
};

struct McConfig {
    std::size_t n_paths = 100000;
    int steps_per_year = 1000;  ///< time steps = ceil(steps_per_year * T)
    /// Each step's Brownian increment is the scaled sum of this many finer
    /// draws, so (n steps, 2 substeps) follows the same path as (2n, 1).
    int brownian_substeps = 1;
    std::uint64_t seed = 1;
    std::uint32_t stream = 0;  ///< distinguishes independent path sets under one seed
    bool use_control_variate = true;
    bool estimate_beta = true;  ///< otherwise beta = 1
    int jobs = 1;

    void validate() const;
    int steps_for(double maturity) const;
};

struct PriceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;
    int n_steps = 0;
    double beta = 0.0;  ///< control-variate coefficient used (0 when off)
};

/// Terminal log-returns of every path for both assets and for the
/// constant-volatility control legs driven by the same increments.
/// Spot-free: estimates for any (S0^X, S0^Y) are read from one sample.
struct TerminalSample {
    std::vector<double> log_ret_x;
    std::vector<double> log_ret_y;
    std::vector<double> cv_log_ret_x;
    std::vector<double> cv_log_ret_y;
    double maturity = 0.0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;
    double min_variance = 0.0;  ///< smallest truncated variance used in any step

    std::size_t size() const { return log_ret_x.size(); }
};

/// Simulates the model with full-truncation Euler for the variance and
/// log-Euler for the assets. Throws DomainError for an invalid correlation
/// matrix and NumericalError (with path and step) on non-finite values.
TerminalSample simulate_terminal(const TwoAssetModel& model, double maturity, const McConfig& mc);

/// E(S_T^X - S_T^Y)^+ from a terminal sample with spots s0x, s0y. The control
/// payoff has mean margrabe_price(ln s0x, ln s0y, sigma_tilde_0, T).
PriceEstimate estimate_exchange(const TerminalSample& sample, const TwoAssetModel& model,
                                double s0x, double s0y, const McConfig& mc);

/// simulate_terminal + estimate_exchange at the model's own spots.
PriceEstimate simulate_exchange(const TwoAssetModel& model, double maturity, const McConfig& mc);

enum class Leg { x, y };

/// One-asset European call on leg `leg` with a Black-Scholes control variate
/// at volatility lambda sigma0.
PriceEstimate simulate_vanilla(const TwoAssetModel& model, Leg leg, double strike,
                               double maturity, const McConfig& mc);

}  // namespace strikeconv
