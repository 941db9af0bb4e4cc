#pragma once

#include <cmath>
#include <numbers>

namespace strikeconv {

/// Standard normal density.
inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF through erfc, which keeps full relative precision in the
/// lower tail (Phi(-38) is still representable, 1 - Phi(38) is not needed).
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace strikeconv
