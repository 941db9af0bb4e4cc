#pragma once

// Black-Scholes call pricing in log coordinates with zero rates, and
// implied-volatility inversion.

namespace strikeconv {

/// A European call described in log coordinates. Time to expiry is
/// `maturity - t`.
struct VanillaSpec {
    double t = 0.0;
    double maturity = 0.0;
    double log_spot = 0.0;
    double log_strike = 0.0;
    double sigma = 0.0;

    double tau() const { return maturity - t; }
};

/// Call price e^x N(d1) - e^k N(d2). Returns the intrinsic value when
/// tau == 0 or sigma == 0. A log strike of -inf is a zero strike.
/// Throws InputError for NaN, +inf, negative sigma or negative tau.
double bs_price(const VanillaSpec& spec);

/// Out-of-the-money part of the call price, i.e. price minus intrinsic.
/// Computed without cancellation against the intrinsic value.
double bs_time_value(const VanillaSpec& spec);

/// dPrice/dSigma = e^x phi(d1) sqrt(tau); zero at tau == 0.
double bs_vega(const VanillaSpec& spec);

/// Implied volatility of a call price with intrinsic < price < e^x.
///
/// Newton iteration seeded at 0.5 inside a maintained bisection bracket that
/// starts at [1e-6, 5] and is widened if the price needs a larger volatility.
/// Iterates until the volatility is pinned to machine precision; the result
/// reprices to within 1e-12 * e^x.
///
/// Throws DomainError if the price violates the bounds and NumericalError if
/// the iteration cap is reached.
double implied_vol(double price, double t, double maturity, double log_spot, double log_strike);

/// Same as implied_vol but takes the time value (price - intrinsic) directly.
/// This is the accurate route for deep in-the-money quotes whose time value is
/// below the resolution of the full price.
double implied_vol_from_time_value(double time_value, double t, double maturity, double log_spot,
                                   double log_strike);

}  // namespace strikeconv
