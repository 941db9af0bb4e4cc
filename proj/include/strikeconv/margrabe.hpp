#pragma once

namespace strikeconv {

/// Exchange option (S_T^X - S_T^Y)^+ under joint lognormality with exchange
/// volatility gamma: BS(0, x, y, gamma) with the Y leg as log strike.
/// y = -inf is allowed and gives e^x.
double margrabe_price(double log_spot_x, double log_spot_y, double gamma, double maturity);

/// Exchange volatility sqrt(IX^2 + IY^2 - 2 rho IX IY) built from leg vols.
/// Throws InputError for rho outside [-1, 1] or negative vols.
double convention_gamma(double vol_x, double vol_y, double rho);

/// Volatility gamma_hat that reproduces an exchange option price through
/// margrabe_price. Same bounds and errors as implied_vol.
double exchange_implied_vol(double price, double log_spot_x, double log_spot_y, double maturity);

struct ImpliedCorrelation {
    double value = 0.0;
    /// false when value falls outside [-1, 1]; the value is not clamped.
    bool in_range = true;
};

/// Correlation that makes convention_gamma(vol_x, vol_y, rho) equal gamma_hat:
/// (IX^2 + IY^2 - gamma_hat^2) / (2 IX IY). Throws DomainError if IX * IY == 0.
ImpliedCorrelation implied_correlation(double gamma_hat, double vol_x, double vol_y);

}  // namespace strikeconv
