#include "strikeconv/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "strikeconv/errors.hpp"
#include "strikeconv/normal.hpp"

namespace strikeconv {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool is_neg_inf(double v) { return std::isinf(v) && v < 0.0; }

void validate(const VanillaSpec& s) {
    if (!std::isfinite(s.t) || !std::isfinite(s.maturity) || !std::isfinite(s.log_spot) ||
        std::isnan(s.log_strike) || (std::isinf(s.log_strike) && s.log_strike > 0.0) ||
        !std::isfinite(s.sigma)) {
        throw InputError("bs: non-finite input");
    }
    if (s.tau() < 0.0) throw InputError("bs: maturity before valuation time");
    if (s.sigma < 0.0) throw InputError("bs: negative volatility");
}

// Time value with everything already validated.
double time_value_unchecked(double tau, double x, double k, double sigma) {
    if (is_neg_inf(k) || tau == 0.0 || sigma == 0.0) return 0.0;
    const double sd = sigma * std::sqrt(tau);
    const double d1 = (x - k) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (x <= k) {
        // out-of-the-money call
        return std::exp(x) * norm_cdf(d1) - std::exp(k) * norm_cdf(d2);
    }
    // in-the-money call: time value equals the out-of-the-money put
    return std::exp(k) * norm_cdf(-d2) - std::exp(x) * norm_cdf(-d1);
}

double vega_unchecked(double tau, double x, double k, double sigma) {
    if (is_neg_inf(k) || tau == 0.0 || sigma == 0.0) return 0.0;
    const double sd = sigma * std::sqrt(tau);
    const double d1 = (x - k) / sd + 0.5 * sd;
    return std::exp(x) * norm_pdf(d1) * std::sqrt(tau);
}

double intrinsic(double x, double k) {
    if (is_neg_inf(k)) return std::exp(x);
    return x > k ? std::exp(x) - std::exp(k) : 0.0;
}

}  // namespace

double bs_price(const VanillaSpec& spec) {
    validate(spec);
    return intrinsic(spec.log_spot, spec.log_strike) +
           time_value_unchecked(spec.tau(), spec.log_spot, spec.log_strike, spec.sigma);
}

double bs_time_value(const VanillaSpec& spec) {
    validate(spec);
    return time_value_unchecked(spec.tau(), spec.log_spot, spec.log_strike, spec.sigma);
}

double bs_vega(const VanillaSpec& spec) {
    validate(spec);
    return vega_unchecked(spec.tau(), spec.log_spot, spec.log_strike, spec.sigma);
}

double implied_vol_from_time_value(double time_value, double t, double maturity, double log_spot,
                                   double log_strike) {
    validate(VanillaSpec{t, maturity, log_spot, log_strike, 0.0});
    if (!std::isfinite(time_value)) throw InputError("implied_vol: non-finite price");
    if (is_neg_inf(log_strike)) throw DomainError("implied_vol: zero strike has no time value");
    const double tau = maturity - t;
    if (tau <= 0.0) throw DomainError("implied_vol: no time to expiry");
    const double x = log_spot;
    const double k = log_strike;
    // Upper bound on the time value: e^x - intrinsic = min(e^x, e^k).
    const double cap = std::exp(std::min(x, k));
    if (!(time_value > 0.0) || !(time_value < cap)) {
        throw DomainError("implied_vol: price outside (intrinsic, spot), time value " +
                          std::to_string(time_value));
    }

    auto f = [&](double s) { return time_value_unchecked(tau, x, k, s) - time_value; };

    double lo = 1e-6;
    double hi = 5.0;
    for (int i = 0; i < 8 && f(lo) > 0.0; ++i) lo *= 1e-2;
    for (int i = 0; i < 20 && f(hi) < 0.0; ++i) hi *= 2.0;
    if (f(lo) > 0.0 || f(hi) < 0.0) {
        throw NumericalError("implied_vol: could not bracket the volatility");
    }

    // Safeguarded Newton: take the Newton step when it stays inside the bracket
    // and shrinks fast enough, otherwise bisect.
    double sigma = std::clamp(0.5, lo, hi);
    double step_old = hi - lo;
    double step = step_old;
    double fv = f(sigma);
    double dv = vega_unchecked(tau, x, k, sigma);
    bool converged = false;
    for (int iter = 0; iter < 400; ++iter) {
        if (fv == 0.0) {
            converged = true;
            break;
        }
        if (fv < 0.0) {
            lo = sigma;
        } else {
            hi = sigma;
        }
        const bool newton_leaves = ((sigma - hi) * dv - fv) * ((sigma - lo) * dv - fv) > 0.0;
        const bool newton_slow = std::abs(2.0 * fv) > std::abs(step_old * dv);
        step_old = step;
        if (dv <= 0.0 || newton_leaves || newton_slow) {
            step = 0.5 * (hi - lo);
            sigma = lo + step;
        } else {
            step = fv / dv;
            sigma -= step;
        }
        if (std::abs(step) <= 4.0 * kEps * sigma || hi - lo <= 4.0 * kEps * hi) {
            converged = true;
            break;
        }
        fv = f(sigma);
        dv = vega_unchecked(tau, x, k, sigma);
    }
    if (!converged) throw NumericalError("implied_vol: iteration cap reached");
    const double residual = std::abs(f(sigma));
    if (residual > 1e-12 * std::exp(x)) {
        throw NumericalError("implied_vol: residual " + std::to_string(residual) +
                             " above tolerance");
    }
    return sigma;
}

double implied_vol(double price, double t, double maturity, double log_spot, double log_strike) {
    validate(VanillaSpec{t, maturity, log_spot, log_strike, 0.0});
    if (!std::isfinite(price)) throw InputError("implied_vol: non-finite price");
    const double lower = intrinsic(log_spot, log_strike);
    const double upper = std::exp(log_spot);
    if (!(price > lower) || !(price < upper)) {
        throw DomainError("implied_vol: price outside (intrinsic, spot)");
    }
    return implied_vol_from_time_value(price - lower, t, maturity, log_spot, log_strike);
}

}  // namespace strikeconv
