#pragma once

// Log-linear strike conventions k_X = (1-a) x + a y, k_Y = a x + (1-a) y and
// the coefficient a* that makes them first-order short-time optimal.

#include "strikeconv/heston.hpp"

namespace strikeconv {

struct LinearConvention {
    double a = 0.0;
    bool bounded = false;  ///< when set, a must lie in [-1, 2]

    void validate() const;
};

struct StrikePair {
    double k_x = 0.0;
    double k_y = 0.0;
};

/// Log strikes picked by the convention for log spots (x, y). At x == y both
/// strikes equal x for every a.
StrikePair strikes(const LinearConvention& conv, double x, double y);

/// Short-time limits of the 1V2L model that enter the optimal convention.
struct ModelLimits {
    double lambda_x = 1.0;
    double lambda_y = 1.0;
    double rho = 0.0;
    double rho_x = 0.0;
    double rho_y = 0.0;

    void validate() const;
};

/// Coefficient of a in the linear 1-STOSC equation:
/// rho_X (lambda_X - rho lambda_Y) - rho_Y (lambda_Y - rho lambda_X).
double linear_stosc_coefficient(const ModelLimits& limits);

/// a* = (rho_X lambda_X - rho_Y lambda_Y) / linear_stosc_coefficient.
/// Throws DegenerateConventionError when |coefficient| < 1e-12.
double a_star_parametric(const ModelLimits& limits);

/// a* from measured ATM levels I and skews S:
/// (S_X I_X - S_Y I_Y) / (S_X (I_X - rho I_Y) - S_Y (I_Y - rho I_X)).
/// Throws DegenerateConventionError when |denominator| < 1e-12.
double a_star_observables(const SmileObservables& obs, double rho);

/// clamp(a, -1, 2).
double bound_a(double a);

/// a * coefficient - (lambda_X rho_X - rho_Y lambda_Y); zero exactly at a*.
double linear_stosc_residual(double a, const ModelLimits& limits);

/// Inputs to the general first-order condition for an arbitrary convention,
/// in short-time-limit form.
struct GeneralStoscInputs {
    double sigma0_x = 0.0;  ///< spot volatility of X
    double sigma0_y = 0.0;
    double dplus_x = 0.0;   ///< limit of the Malliavin derivative of sigma^X
    double dplus_y = 0.0;
    double rho = 0.0;
    double rho_x = 0.0;
    double rho_y = 0.0;
    double dkx_dy = 0.0;    ///< sensitivity of k_X to y at the money
    double dky_dy = 0.0;
};

/// Left-hand side minus right-hand side of the general 1-STOSC condition,
/// with ATM implied vols replaced by their limits sigma0_i, skews by
/// rho_i D+sigma_i / (2 sigma0_i), and dI_Y/dy by -dI_Y/dz.
/// Throws DomainError when the exchange spot volatility is zero.
double general_residual(const GeneralStoscInputs& in);

}  // namespace strikeconv
