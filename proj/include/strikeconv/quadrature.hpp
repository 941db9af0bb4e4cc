#pragma once

#include <functional>

namespace strikeconv {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    bool converged = true;
};

/// Adaptive Gauss-Legendre quadrature on [a, b].
///
/// Each panel is integrated with a 20-point rule and compared against the sum
/// of the same rule on its two halves; panels whose difference exceeds their
/// share of `abs_tol` are split further, up to `max_depth` levels. The range is
/// first cut into `initial_panels` equal pieces so oscillatory integrands are
/// not accepted on a lucky first estimate.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int initial_panels = 16, int max_depth = 30);

}  // namespace strikeconv
