#include "strikeconv/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace strikeconv {

namespace {

constexpr int kOrder = 20;

struct GaussLegendre {
    std::array<double, kOrder> nodes{};
    std::array<double, kOrder> weights{};

    GaussLegendre() {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        for (int i = 0; i < kOrder; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int n = 2; n <= kOrder; ++n) {
                    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                    p0 = p1;
                    p1 = p2;
                }
                dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const GaussLegendre& rule() {
    static const GaussLegendre gl;
    return gl;
}

double panel(const std::function<double(double)>& f, double a, double b, int& evals) {
    const auto& gl = rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int i = 0; i < kOrder; ++i) sum += gl.weights[i] * f(mid + half * gl.nodes[i]);
    evals += kOrder;
    return half * sum;
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int initial_panels, int max_depth) {
    QuadratureResult out;
    if (a == b) return out;
    const double width = b - a;

    struct Task {
        double lo;
        double hi;
        double whole;
        int depth;
    };
    std::vector<Task> stack;
    const double step = width / initial_panels;
    for (int i = initial_panels - 1; i >= 0; --i) {
        const double lo = a + i * step;
        const double hi = (i == initial_panels - 1) ? b : lo + step;
        stack.push_back({lo, hi, panel(f, lo, hi, out.evaluations), 0});
    }

    while (!stack.empty()) {
        const Task t = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (t.lo + t.hi);
        const double left = panel(f, t.lo, mid, out.evaluations);
        const double right = panel(f, mid, t.hi, out.evaluations);
        const double refined = left + right;
        const double diff = std::abs(refined - t.whole);
        const double share = abs_tol * (t.hi - t.lo) / width;
        if (diff <= share || t.depth >= max_depth) {
            if (diff > share) out.converged = false;
            out.value += refined;
            out.error_estimate += diff;
        } else {
            stack.push_back({mid, t.hi, right, t.depth + 1});
            stack.push_back({t.lo, mid, left, t.depth + 1});
        }
    }
    return out;
}

}  // namespace strikeconv
