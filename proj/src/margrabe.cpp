#include "strikeconv/margrabe.hpp"

#include <algorithm>
#include <cmath>

#include "strikeconv/blackscholes.hpp"
#include "strikeconv/errors.hpp"

namespace strikeconv {

double margrabe_price(double log_spot_x, double log_spot_y, double gamma, double maturity) {
    if (!(maturity > 0.0)) throw InputError("margrabe: maturity must be positive");
    if (!(gamma >= 0.0)) throw InputError("margrabe: gamma must be non-negative");
    return bs_price(VanillaSpec{0.0, maturity, log_spot_x, log_spot_y, gamma});
}

double convention_gamma(double vol_x, double vol_y, double rho) {
    if (!std::isfinite(vol_x) || !std::isfinite(vol_y) || !std::isfinite(rho)) {
        throw InputError("convention_gamma: non-finite input");
    }
    if (vol_x < 0.0 || vol_y < 0.0) throw InputError("convention_gamma: negative volatility");
    if (rho < -1.0 || rho > 1.0) throw InputError("convention_gamma: rho outside [-1, 1]");
    // (IX - IY)^2 + 2(1 - rho) IX IY keeps the radicand non-negative at rho = 1.
    const double diff = vol_x - vol_y;
    const double radicand = diff * diff + 2.0 * (1.0 - rho) * vol_x * vol_y;
    return std::sqrt(std::max(radicand, 0.0));
}

double exchange_implied_vol(double price, double log_spot_x, double log_spot_y, double maturity) {
    if (!(maturity > 0.0)) throw InputError("exchange_implied_vol: maturity must be positive");
    return implied_vol(price, 0.0, maturity, log_spot_x, log_spot_y);
}

ImpliedCorrelation implied_correlation(double gamma_hat, double vol_x, double vol_y) {
    if (!std::isfinite(gamma_hat) || !std::isfinite(vol_x) || !std::isfinite(vol_y)) {
        throw InputError("implied_correlation: non-finite input");
    }
    const double denom = 2.0 * vol_x * vol_y;
    if (denom == 0.0) throw DomainError("implied_correlation: zero leg volatility");
    const double value = (vol_x * vol_x + vol_y * vol_y - gamma_hat * gamma_hat) / denom;
    return {value, value >= -1.0 && value <= 1.0};
}

}  // namespace strikeconv
