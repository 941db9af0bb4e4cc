#include "strikeconv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "strikeconv/blackscholes.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/margrabe.hpp"
#include "strikeconv/parallel.hpp"
#include "strikeconv/rng.hpp"

namespace strikeconv {

namespace {

constexpr double kPivotTol = 1e-12;

void check_corr(double v, const char* name) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
        throw InputError(std::string(name) + " outside [-1, 1]");
    }
}

[[noreturn]] void throw_path_failure(std::size_t path, int step, double v) {
    std::ostringstream msg;
    msg << "simulation: non-finite state on path " << path << " at step " << step
        << " (variance " << v << ")";
    throw NumericalError(msg.str());
}

struct Moments {
    double value;
    double std_error;
    double beta;
};

// Control-variate estimator mean(p - beta (c - c_mean)), reduced in path order.
template <class Payoff, class Control>
Moments reduce(std::size_t n, Payoff payoff, Control control, double control_mean,
               const McConfig& mc) {
    const double dn = static_cast<double>(n);
    double beta = 0.0;
    if (mc.use_control_variate) {
        beta = 1.0;
        if (mc.estimate_beta) {
            double mp = 0.0;
            double mcv = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mp += payoff(i);
                mcv += control(i);
            }
            mp /= dn;
            mcv /= dn;
            double sxy = 0.0;
            double sxx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dc = control(i) - mcv;
                sxy += (payoff(i) - mp) * dc;
                sxx += dc * dc;
            }
            beta = sxx > 0.0 ? sxy / sxx : 0.0;
        }
    }
    auto adjusted = [&](std::size_t i) {
        double p = payoff(i);
        if (beta != 0.0) p -= beta * (control(i) - control_mean);
        return p;
    };
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += adjusted(i);
    mean /= dn;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = adjusted(i) - mean;
        ss += d * d;
    }
    const double var = ss / (dn - 1.0);
    return {mean, std::sqrt(var / dn), beta};
}

}  // namespace

CorrelationCheck validate_correlation(const CorrelationStructure& c) {
    check_corr(c.rho, "rho");
    check_corr(c.rho_x, "rho_x");
    check_corr(c.rho_y, "rho_y");
    const double det = 1.0 + 2.0 * c.rho * c.rho_x * c.rho_y - c.rho * c.rho - c.rho_x * c.rho_x -
                       c.rho_y * c.rho_y;
    // The 2x2 principal minors 1 - r^2 are non-negative for entries in [-1, 1].
    return {det >= -kPivotTol, det};
}

Matrix3 cholesky3(const CorrelationStructure& c) {
    check_corr(c.rho, "rho");
    check_corr(c.rho_x, "rho_x");
    check_corr(c.rho_y, "rho_y");
    const Matrix3 a{{{1.0, c.rho, c.rho_x}, {c.rho, 1.0, c.rho_y}, {c.rho_x, c.rho_y, 1.0}}};
    Matrix3 l{};
    for (int j = 0; j < 3; ++j) {
        double d = a[j][j];
        for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        if (d < -kPivotTol) throw DomainError("cholesky3: correlation matrix is not positive semi-definite");
        if (d <= kPivotTol) {
            for (int i = j + 1; i < 3; ++i) {
                double r = a[i][j];
                for (int k = 0; k < j; ++k) r -= l[i][k] * l[j][k];
                if (std::abs(r) > 1e-8) {
                    throw DomainError("cholesky3: correlation matrix is not positive semi-definite");
                }
            }
            continue;
        }
        l[j][j] = std::sqrt(d);
        for (int i = j + 1; i < 3; ++i) {
            double r = a[i][j];
            for (int k = 0; k < j; ++k) r -= l[i][k] * l[j][k];
            l[i][j] = r / l[j][j];
        }
    }
    return l;
}

double TwoAssetModel::exchange_spot_vol() const {
    const double lx = x.lambda;
    const double ly = y.lambda;
    const double diff = lx - ly;
    return heston.sigma0 * std::sqrt(std::max(diff * diff + 2.0 * (1.0 - rho) * lx * ly, 0.0));
}

void TwoAssetModel::validate() const {
    heston.validate();
    x.validate();
    y.validate();
    check_corr(rho, "rho");
}

void McConfig::validate() const {
    if (n_paths < 2) throw InputError("mc: n_paths must be at least 2");
    if (steps_per_year < 1) throw InputError("mc: steps_per_year must be positive");
    if (jobs < 1) throw InputError("mc: jobs must be positive");
    if (brownian_substeps < 1) throw InputError("mc: brownian_substeps must be positive");
}

int McConfig::steps_for(double maturity) const {
    if (!std::isfinite(maturity) || !(maturity > 0.0)) {
        throw InputError("mc: maturity must be positive");
    }
    const double raw = steps_per_year * maturity;
    // Guard against 250 * 0.05 = 12.500000000000002 style round-off.
    return std::max(1, static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, raw))));
}

TerminalSample simulate_terminal(const TwoAssetModel& model, double maturity, const McConfig& mc) {
    model.validate();
    mc.validate();
    const int steps = mc.steps_for(maturity);
    const auto corr = model.correlations();
    const auto check = validate_correlation(corr);
    if (!check.valid) {
        std::ostringstream msg;
        msg << "simulation: invalid correlation triple (rho=" << corr.rho << ", rho_x=" << corr.rho_x
            << ", rho_y=" << corr.rho_y << ", det=" << check.determinant << ")";
        throw DomainError(msg.str());
    }
    const Matrix3 l = cholesky3(corr);

    const std::size_t n = mc.n_paths;
    TerminalSample out;
    out.log_ret_x.resize(n);
    out.log_ret_y.resize(n);
    out.cv_log_ret_x.resize(n);
    out.cv_log_ret_y.resize(n);
    out.maturity = maturity;
    out.n_steps = steps;
    out.seed = mc.seed;
    out.stream = mc.stream;

    const double dt = maturity / steps;
    const double sdt = std::sqrt(dt);
    const int substeps = mc.brownian_substeps;
    const double sub_scale = 1.0 / std::sqrt(static_cast<double>(substeps));
    const auto& h = model.heston;
    const double lx = model.x.lambda;
    const double ly = model.y.lambda;
    const double v0 = h.sigma0 * h.sigma0;
    const double cv_drift_x = -0.5 * lx * lx * v0 * dt;
    const double cv_drift_y = -0.5 * ly * ly * v0 * dt;
    const double cv_diff_x = lx * h.sigma0 * sdt;
    const double cv_diff_y = ly * h.sigma0 * sdt;

    std::vector<double> min_var(n);
    parallel_for(n, mc.jobs, [&](std::size_t path) {
        PathNormals normals(mc.seed, mc.stream, path);
        double v = v0;
        double x = 0.0;
        double y = 0.0;
        double cx = 0.0;
        double cy = 0.0;
        double vmin = v0;
        for (int step = 0; step < steps; ++step) {
            double e0 = 0.0;
            double e1 = 0.0;
            double e2 = 0.0;
            for (int sub = 0; sub < substeps; ++sub) {
                e0 += normals.next();
                e1 += normals.next();
                e2 += normals.next();
            }
            e0 *= sub_scale;
            e1 *= sub_scale;
            e2 *= sub_scale;
            const double wx = l[0][0] * e0;
            const double wy = l[1][0] * e0 + l[1][1] * e1;
            const double wz = l[2][0] * e0 + l[2][1] * e1 + l[2][2] * e2;
            const double vp = std::max(v, 0.0);
            const double sv = std::sqrt(vp);
            vmin = std::min(vmin, vp);
            x += -0.5 * lx * lx * vp * dt + lx * sv * sdt * wx;
            y += -0.5 * ly * ly * vp * dt + ly * sv * sdt * wy;
            cx += cv_drift_x + cv_diff_x * wx;
            cy += cv_drift_y + cv_diff_y * wy;
            v += h.kappa * (h.theta - vp) * dt + h.nu * sv * sdt * wz;
            if (!std::isfinite(v)) throw_path_failure(path, step, v);
        }
        if (!std::isfinite(x) || !std::isfinite(y)) throw_path_failure(path, steps, v);
        out.log_ret_x[path] = x;
        out.log_ret_y[path] = y;
        out.cv_log_ret_x[path] = cx;
        out.cv_log_ret_y[path] = cy;
        min_var[path] = vmin;
    });
    out.min_variance = *std::min_element(min_var.begin(), min_var.end());
    return out;
}

PriceEstimate estimate_exchange(const TerminalSample& sample, const TwoAssetModel& model,
                                double s0x, double s0y, const McConfig& mc) {
    if (!(s0x > 0.0) || !(s0y > 0.0) || !std::isfinite(s0x) || !std::isfinite(s0y)) {
        throw InputError("estimate_exchange: spots must be positive");
    }
    const std::size_t n = sample.size();
    if (n < 2) throw InputError("estimate_exchange: sample needs at least 2 paths");
    const double cv_mean =
        mc.use_control_variate
            ? margrabe_price(std::log(s0x), std::log(s0y), model.exchange_spot_vol(), sample.maturity)
            : 0.0;
    auto payoff = [&](std::size_t i) {
        return std::max(s0x * std::exp(sample.log_ret_x[i]) - s0y * std::exp(sample.log_ret_y[i]), 0.0);
    };
    auto control = [&](std::size_t i) {
        return std::max(s0x * std::exp(sample.cv_log_ret_x[i]) - s0y * std::exp(sample.cv_log_ret_y[i]),
                        0.0);
    };
    const auto m = reduce(n, payoff, control, cv_mean, mc);
    return {m.value, m.std_error, n, sample.seed, sample.stream, sample.n_steps, m.beta};
}

PriceEstimate simulate_exchange(const TwoAssetModel& model, double maturity, const McConfig& mc) {
    const auto sample = simulate_terminal(model, maturity, mc);
    return estimate_exchange(sample, model, model.x.s0, model.y.s0, mc);
}

PriceEstimate simulate_vanilla(const TwoAssetModel& model, Leg leg, double strike, double maturity,
                               const McConfig& mc) {
    model.validate();
    mc.validate();
    if (!std::isfinite(strike) || strike < 0.0) throw InputError("simulate_vanilla: strike must be >= 0");
    const int steps = mc.steps_for(maturity);
    const AssetSpec& asset = leg == Leg::x ? model.x : model.y;
    const auto& h = model.heston;
    const double lam = asset.lambda;
    const double rho_sv = asset.rho_sv;
    const double rho_perp = std::sqrt(std::max(1.0 - rho_sv * rho_sv, 0.0));
    const double dt = maturity / steps;
    const double sdt = std::sqrt(dt);
    const int substeps = mc.brownian_substeps;
    const double sub_scale = 1.0 / std::sqrt(static_cast<double>(substeps));
    const double v0 = h.sigma0 * h.sigma0;
    const double cv_drift = -0.5 * lam * lam * v0 * dt;
    const double cv_diff = lam * h.sigma0 * sdt;

    const std::size_t n = mc.n_paths;
    std::vector<double> ret(n);
    std::vector<double> cv_ret(n);
    parallel_for(n, mc.jobs, [&](std::size_t path) {
        PathNormals normals(mc.seed, mc.stream, path);
        double v = v0;
        double s = 0.0;
        double c = 0.0;
        for (int step = 0; step < steps; ++step) {
            double w = 0.0;
            double zp = 0.0;
            for (int sub = 0; sub < substeps; ++sub) {
                w += normals.next();
                zp += normals.next();
            }
            w *= sub_scale;
            const double z = rho_sv * w + rho_perp * zp * sub_scale;
            const double vp = std::max(v, 0.0);
            const double sv = std::sqrt(vp);
            s += -0.5 * lam * lam * vp * dt + lam * sv * sdt * w;
            c += cv_drift + cv_diff * w;
            v += h.kappa * (h.theta - vp) * dt + h.nu * sv * sdt * z;
            if (!std::isfinite(v)) throw_path_failure(path, step, v);
        }
        if (!std::isfinite(s)) throw_path_failure(path, steps, v);
        ret[path] = s;
        cv_ret[path] = c;
    });

    const double s0 = asset.s0;
    const double log_strike = strike > 0.0 ? std::log(strike) : -INFINITY;
    const double cv_mean = mc.use_control_variate
                               ? bs_price(VanillaSpec{0.0, maturity, std::log(s0), log_strike,
                                                      lam * h.sigma0})
                               : 0.0;
    auto payoff = [&](std::size_t i) { return std::max(s0 * std::exp(ret[i]) - strike, 0.0); };
    auto control = [&](std::size_t i) { return std::max(s0 * std::exp(cv_ret[i]) - strike, 0.0); };
    const auto m = reduce(n, payoff, control, cv_mean, mc);
    return {m.value, m.std_error, n, mc.seed, mc.stream, steps, m.beta};
}

}  // namespace strikeconv
