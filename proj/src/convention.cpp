#include "strikeconv/convention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "strikeconv/errors.hpp"

namespace strikeconv {

namespace {

constexpr double kDegenerate = 1e-12;

void check_corr(double v, const char* name) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
        throw InputError(std::string(name) + " outside [-1, 1]");
    }
}

}  // namespace

void LinearConvention::validate() const {
    if (!std::isfinite(a)) throw InputError("convention: a must be finite");
    if (bounded && (a < -1.0 || a > 2.0)) throw InputError("convention: bounded a outside [-1, 2]");
}

StrikePair strikes(const LinearConvention& conv, double x, double y) {
    conv.validate();
    if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("strikes: non-finite log spot");
    if (x == y) return {x, x};
    return {(1.0 - conv.a) * x + conv.a * y, conv.a * x + (1.0 - conv.a) * y};
}

void ModelLimits::validate() const {
    if (!std::isfinite(lambda_x) || !(lambda_x > 0.0) || !std::isfinite(lambda_y) ||
        !(lambda_y > 0.0)) {
        throw InputError("model limits: lambdas must be positive");
    }
    check_corr(rho, "rho");
    check_corr(rho_x, "rho_x");
    check_corr(rho_y, "rho_y");
}

namespace {

// a b - c d to about one ulp (Kahan's fma trick).
double diff_of_products(double a, double b, double c, double d) {
    const double cd = c * d;
    const double err = std::fma(-c, d, cd);
    return std::fma(a, b, -cd) + err;
}

double a_star_numerator(const ModelLimits& l) {
    return diff_of_products(l.rho_x, l.lambda_x, l.rho_y, l.lambda_y);
}

}  // namespace

double linear_stosc_coefficient(const ModelLimits& l) {
    l.validate();
    // rho_X (lambda_X - rho lambda_Y) - rho_Y (lambda_Y - rho lambda_X), regrouped
    // so the equal-correlation and equal-level cases do not cancel.
    const double cross = diff_of_products(l.rho_x, l.lambda_y, l.rho_y, l.lambda_x);
    return std::fma(-l.rho, cross, a_star_numerator(l));
}

double a_star_parametric(const ModelLimits& l) {
    const double coeff = linear_stosc_coefficient(l);
    if (std::abs(coeff) < kDegenerate) {
        throw DegenerateConventionError("a*: 1-STOSC coefficient is zero, no unique convention");
    }
    return a_star_numerator(l) / coeff;
}

double a_star_observables(const SmileObservables& o, double rho) {
    check_corr(rho, "rho");
    if (!(o.atm_level_x > 0.0) || !(o.atm_level_y > 0.0)) {
        throw InputError("a*: ATM levels must be positive");
    }
    if (!std::isfinite(o.atm_skew_x) || !std::isfinite(o.atm_skew_y)) {
        throw InputError("a*: non-finite skew");
    }
    const double ix = o.atm_level_x;
    const double iy = o.atm_level_y;
    const double sx = o.atm_skew_x;
    const double sy = o.atm_skew_y;
    const double denom = sx * (ix - rho * iy) - sy * (iy - rho * ix);
    if (std::abs(denom) < kDegenerate) {
        throw DegenerateConventionError("a*: observable denominator is zero");
    }
    return (sx * ix - sy * iy) / denom;
}

double bound_a(double a) {
    if (!std::isfinite(a)) throw InputError("bound_a: non-finite a");
    return std::clamp(a, -1.0, 2.0);
}

double linear_stosc_residual(double a, const ModelLimits& l) {
    if (!std::isfinite(a)) throw InputError("residual: non-finite a");
    return a * linear_stosc_coefficient(l) - a_star_numerator(l);
}

double general_residual(const GeneralStoscInputs& in) {
    check_corr(in.rho, "rho");
    check_corr(in.rho_x, "rho_x");
    check_corr(in.rho_y, "rho_y");
    const double sx = in.sigma0_x;
    const double sy = in.sigma0_y;
    if (!(sx > 0.0) || !(sy > 0.0)) throw InputError("general residual: spot vols must be > 0");
    const double diff = sx - sy;
    const double tilde2 = diff * diff + 2.0 * (1.0 - in.rho) * sx * sy;
    if (!(tilde2 > 0.0)) throw DomainError("general residual: exchange spot volatility is zero");
    const double tilde = std::sqrt(tilde2);

    const double lhs = (in.rho_x * sx - in.rho_y * sy) / (2.0 * tilde2 * tilde) *
                       (in.dplus_x * (sx - in.rho * sy) + in.dplus_y * (sy - in.rho * sx));

    // Short-time limits of the vanilla quantities.
    const double skew_x = in.rho_x * in.dplus_x / (2.0 * sx);
    const double skew_y = in.rho_y * in.dplus_y / (2.0 * sy);
    const double spot_sens_y = -skew_y;
    const double y_leg = skew_y * in.dky_dy + spot_sens_y;
    const double rhs = (sx * skew_x * in.dkx_dy + sy * y_leg - in.rho * sx * y_leg -
                        in.rho * sy * skew_x * in.dkx_dy) /
                       tilde;
    return lhs - rhs;
}

}  // namespace strikeconv
