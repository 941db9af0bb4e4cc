#include "strikeconv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "strikeconv/convention.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/format.hpp"
#include "strikeconv/margrabe.hpp"
#include "strikeconv/parallel.hpp"

namespace strikeconv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kCsvHeader =
    "T,rho,rho_X,rho_Y,s0Y,convention,a_value,kX,kY,IX,IY,margrabe_price,mc_price,mc_stderr,error,"
    "implied_corr,excluded,exclusion_reason";

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

ResultRow blank_row(double t, double rho, double rx, double ry, double s0y, const std::string& conv) {
    ResultRow r;
    r.maturity = t;
    r.rho = rho;
    r.rho_x = rx;
    r.rho_y = ry;
    r.s0y = s0y;
    r.convention = conv;
    r.a_value = r.k_x = r.k_y = r.i_x = r.i_y = kNaN;
    r.margrabe_price = r.mc_price = r.mc_stderr = r.error = r.implied_corr = kNaN;
    return r;
}

void exclude(ResultRow& r, const std::string& reason) {
    r.excluded = true;
    r.exclusion_reason = sanitize(reason);
}

// Prices one convention at one point; sy is looked up in log-moneyness so a
// smile built at any reference spot serves every S0^Y.
void price_convention(ResultRow& row, double a, double s0x, double s0y, double rho,
                      double maturity, const Smile& sx, const Smile& sy, double gamma_hat) {
    const double x = std::log(s0x);
    const double y = std::log(s0y);
    const auto k = strikes(LinearConvention{a, false}, x, y);
    row.a_value = a;
    row.k_x = k.k_x;
    row.k_y = k.k_y;
    row.i_x = sx.vol_at(sx.log_spot() + (k.k_x - x));
    row.i_y = sy.vol_at(sy.log_spot() + (k.k_y - y));
    row.margrabe_price = margrabe_price(x, y, convention_gamma(row.i_x, row.i_y, rho), maturity);
    row.error = row.margrabe_price - row.mc_price;
    if (std::isfinite(gamma_hat)) {
        row.implied_corr = implied_correlation(gamma_hat, row.i_x, row.i_y).value;
    }
}

double gamma_hat_or_nan(double price, double s0x, double s0y, double maturity) {
    try {
        return exchange_implied_vol(price, std::log(s0x), std::log(s0y), maturity);
    } catch (const std::exception&) {
        return kNaN;
    }
}

void check_list(const std::vector<double>& v, const char* name, double lo, double hi) {
    if (v.empty()) throw InputError(std::string("grid: ") + name + " list is empty");
    for (double d : v) {
        if (!std::isfinite(d) || d < lo || d > hi) {
            throw InputError(std::string("grid: ") + name + " value out of range");
        }
    }
}

std::string reason_class(const std::string& reason) {
    const auto pos = reason.find(':');
    return pos == std::string::npos ? reason : reason.substr(0, pos);
}

using PointKey = std::tuple<double, double, double, double, double>;
using ComboKey = std::tuple<double, double, double, double>;

PointKey point_key(const ResultRow& r) { return {r.maturity, r.rho, r.rho_x, r.rho_y, r.s0y}; }
ComboKey combo_key(const ResultRow& r) { return {r.maturity, r.rho, r.rho_x, r.rho_y}; }

double field(const ResultRow& r, const std::string& name) {
    if (name == "T") return r.maturity;
    if (name == "rho") return r.rho;
    if (name == "rho_X") return r.rho_x;
    if (name == "rho_Y") return r.rho_y;
    if (name == "s0Y") return r.s0y;
    throw InputError("metrics: unknown grouping field '" + name + "'");
}

Metrics summarize(const std::vector<const ResultRow*>& rows, const MetricOptions& opt) {
    Metrics m;
    m.n = rows.size();
    m.atm_error = kNaN;
    if (rows.empty()) {
        m.mae = m.mape = m.rmse = m.max_ae = m.mstd = kNaN;
        return m;
    }
    m.empty = false;
    double sum_abs = 0.0;
    double sum_pct = 0.0;
    double sum_sq = 0.0;
    double atm_sum = 0.0;
    std::map<ComboKey, std::vector<double>> by_combo;
    for (const ResultRow* r : rows) {
        const double e = r->error;
        const double ae = std::abs(e);
        sum_abs += ae;
        sum_pct += ae / r->mc_price;
        sum_sq += e * e;
        m.max_ae = std::max(m.max_ae, ae);
        if (std::abs(r->s0y - opt.s0x) < 1e-9) {
            atm_sum += ae;
            ++m.atm_n;
        }
        by_combo[combo_key(*r)].push_back(opt.mstd_signed ? e : ae);
    }
    const double n = static_cast<double>(rows.size());
    m.mae = sum_abs / n;
    m.mape = sum_pct / n;
    m.rmse = std::sqrt(sum_sq / n);
    if (m.atm_n > 0) m.atm_error = atm_sum / static_cast<double>(m.atm_n);
    double std_sum = 0.0;
    for (const auto& [key, errs] : by_combo) {
        const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
        double ss = 0.0;
        for (double e : errs) ss += (e - mean) * (e - mean);
        std_sum += std::sqrt(ss / errs.size());
    }
    m.mstd = std_sum / static_cast<double>(by_combo.size());
    return m;
}

nlohmann::json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string ConventionChoice::name() const {
    switch (kind) {
        case Kind::a_star:
            return "a-star";
        case Kind::a_star_bounded:
            return "a-star-bounded";
        case Kind::fixed:
            break;
    }
    if (a == 0.0) return "atm";
    if (a == 1.0) return "lookup";
    return "a=" + format_double(a);
}

double ConventionChoice::resolve(double a_star) const {
    switch (kind) {
        case Kind::a_star:
            return a_star;
        case Kind::a_star_bounded:
            return bound_a(a_star);
        case Kind::fixed:
            break;
    }
    return a;
}

ConventionChoice parse_convention(const std::string& token) {
    using K = ConventionChoice::Kind;
    if (token == "atm") return {K::fixed, 0.0};
    if (token == "lookup") return {K::fixed, 1.0};
    if (token == "a-star") return {K::a_star, 0.0};
    if (token == "a-star-bounded") return {K::a_star_bounded, 0.0};
    if (token.rfind("a=", 0) == 0) {
        double a = 0.0;
        if (parse_double(token.substr(2), a) && std::isfinite(a)) return {K::fixed, a};
    }
    throw InputError("unknown convention '" + token +
                     "' (expected atm, lookup, a=<value>, a-star or a-star-bounded)");
}

std::vector<ConventionChoice> default_conventions() {
    return {parse_convention("atm"), parse_convention("lookup"), parse_convention("a-star"),
            parse_convention("a-star-bounded")};
}

void GridSpec::validate() const {
    check_list(maturities, "T", 1e-6, 100.0);
    check_list(s0y, "s0Y", 1e-12, 1e12);
    check_list(rho, "rho", -1.0, 1.0);
    check_list(rho_x, "rho_X", -1.0, 1.0);
    check_list(rho_y, "rho_Y", -1.0, 1.0);
    if (!std::isfinite(s0x) || !(s0x > 0.0)) throw InputError("grid: s0X must be positive");
    if (!std::isfinite(lambda_x) || !(lambda_x > 0.0) || !std::isfinite(lambda_y) ||
        !(lambda_y > 0.0)) {
        throw InputError("grid: lambdas must be positive");
    }
    heston.validate();
    mc.validate();
    if (conventions.empty()) throw InputError("grid: no conventions");
    if (smile_points < 4) throw InputError("grid: smile_points must be at least 4");
    if (!std::isfinite(min_mc_price) || min_mc_price < 0.0) {
        throw InputError("grid: min_mc_price must be >= 0");
    }
    if (!std::isfinite(skew.log_strike_step) || !(skew.log_strike_step > 0.0)) {
        throw InputError("grid: skew step must be positive");
    }
}

TwoAssetModel test_case_model(int case_id) {
    if (case_id != 1 && case_id != 2) throw InputError("test case must be 1 or 2");
    TwoAssetModel m;
    m.heston = HestonParams{1.5, 0.15, 0.5, 0.15};
    m.x = AssetSpec{1.5, -0.4, 100.0};
    m.y = AssetSpec{1.0, case_id == 1 ? -0.6 : 0.4, 100.0};
    m.rho = 0.5;
    return m;
}

TestCaseResult run_test_case(int case_id, const TestCaseOptions& options) {
    TestCaseResult out;
    out.case_id = case_id;
    out.model = test_case_model(case_id);
    out.maturity = 0.05;
    const auto& m = out.model;
    const double t = out.maturity;
    std::vector<double> s0y = options.s0y;
    if (s0y.empty()) {
        for (int s = 80; s <= 120; s += 2) s0y.push_back(s);
    }
    if (options.conventions.empty()) throw InputError("test case: no conventions");

    out.smile_x = build_smile(m.heston, m.x, t, default_log_strike_grid(m.x.s0, options.smile_points),
                              "X", options.mc.jobs);
    out.smile_y = build_smile(m.heston, m.y, t, default_log_strike_grid(m.y.s0, options.smile_points),
                              "Y", options.mc.jobs);
    out.observables = measure_atm_observables(m.heston, m.x, m.y, t, options.skew);
    out.a_star = a_star_observables(out.observables, m.rho);
    out.a_star_parametric =
        a_star_parametric(ModelLimits{m.x.lambda, m.y.lambda, m.rho, m.x.rho_sv, m.y.rho_sv});

    const auto sample = simulate_terminal(m, t, options.mc);
    for (double s : s0y) {
        const auto est = estimate_exchange(sample, m, m.x.s0, s, options.mc);
        const double gamma_hat = gamma_hat_or_nan(est.value, m.x.s0, s, t);
        for (const auto& conv : options.conventions) {
            ResultRow row = blank_row(t, m.rho, m.x.rho_sv, m.y.rho_sv, s, conv.name());
            row.mc_price = est.value;
            row.mc_stderr = est.std_error;
            price_convention(row, conv.resolve(out.a_star), m.x.s0, s, m.rho, t, out.smile_x,
                             out.smile_y, gamma_hat);
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

GridCounts count_grid(const GridSpec& spec) {
    spec.validate();
    GridCounts c;
    for (double r : spec.rho) {
        for (double rx : spec.rho_x) {
            for (double ry : spec.rho_y) {
                ++c.triples;
                if (!validate_correlation({r, rx, ry}).valid) ++c.invalid_triples;
            }
        }
    }
    const std::size_t per_triple = spec.maturities.size() * spec.s0y.size();
    c.points = c.triples * per_triple;
    c.invalid_points = c.invalid_triples * per_triple;
    return c;
}

std::vector<ResultRow> run_grid(const GridSpec& spec) {
    spec.validate();
    const std::size_t nt = spec.maturities.size();
    const std::size_t nr = spec.rho.size();
    const std::size_t nx = spec.rho_x.size();
    const std::size_t ny = spec.rho_y.size();

    // Smiles and ATM observables depend on (T, rho_i) only.
    std::vector<Smile> smiles_x(nt * nx);
    std::vector<Smile> smiles_y(nt * ny);
    std::vector<SmileObservables> obs(nt * nx * ny);
    std::vector<std::string> obs_error(nt * nx * ny);
    for (std::size_t it = 0; it < nt; ++it) {
        const double t = spec.maturities[it];
        for (std::size_t ix = 0; ix < nx; ++ix) {
            smiles_x[it * nx + ix] =
                build_smile(spec.heston, AssetSpec{spec.lambda_x, spec.rho_x[ix], spec.s0x}, t,
                            default_log_strike_grid(spec.s0x, spec.smile_points), "X", spec.mc.jobs);
        }
        for (std::size_t iy = 0; iy < ny; ++iy) {
            smiles_y[it * ny + iy] =
                build_smile(spec.heston, AssetSpec{spec.lambda_y, spec.rho_y[iy], spec.s0x}, t,
                            default_log_strike_grid(spec.s0x, spec.smile_points), "Y", spec.mc.jobs);
        }
        parallel_for(nx * ny, spec.mc.jobs, [&](std::size_t j) {
            const std::size_t ix = j / ny;
            const std::size_t iy = j % ny;
            try {
                obs[it * nx * ny + j] = measure_atm_observables(
                    spec.heston, AssetSpec{spec.lambda_x, spec.rho_x[ix], spec.s0x},
                    AssetSpec{spec.lambda_y, spec.rho_y[iy], spec.s0x}, t, spec.skew);
            } catch (const std::exception& e) {
                obs_error[it * nx * ny + j] = e.what();
            }
        });
    }

    const std::size_t n_combo = nt * nr * nx * ny;
    std::vector<std::vector<ResultRow>> per_combo(n_combo);
    McConfig mc = spec.mc;
    mc.jobs = 1;
    parallel_for(n_combo, spec.mc.jobs, [&](std::size_t combo) {
        const std::size_t iy = combo % ny;
        const std::size_t ix = (combo / ny) % nx;
        const std::size_t ir = (combo / (ny * nx)) % nr;
        const std::size_t it = combo / (ny * nx * nr);
        const double t = spec.maturities[it];
        const double rho = spec.rho[ir];
        const double rx = spec.rho_x[ix];
        const double ry = spec.rho_y[iy];
        auto& rows = per_combo[combo];
        rows.reserve(spec.s0y.size() * spec.conventions.size());
        for (double s : spec.s0y) {
            for (const auto& conv : spec.conventions) rows.push_back(blank_row(t, rho, rx, ry, s, conv.name()));
        }
        if (!validate_correlation({rho, rx, ry}).valid) {
            for (auto& r : rows) exclude(r, exclusion::invalid_correlation);
            return;
        }

        TwoAssetModel model;
        model.heston = spec.heston;
        model.x = AssetSpec{spec.lambda_x, rx, spec.s0x};
        model.y = AssetSpec{spec.lambda_y, ry, spec.s0x};
        model.rho = rho;

        // a* for this combo; NaN when degenerate.
        double a_star = kNaN;
        std::string a_star_problem;
        try {
            const std::string& err = obs_error[it * nx * ny + ix * ny + iy];
            if (!err.empty()) throw NumericalError(err);
            a_star = spec.a_star_from_observables
                         ? a_star_observables(obs[it * nx * ny + ix * ny + iy], rho)
                         : a_star_parametric(ModelLimits{spec.lambda_x, spec.lambda_y, rho, rx, ry});
        } catch (const DegenerateConventionError& e) {
            a_star_problem = std::string(exclusion::degenerate_a_star) + ": " + e.what();
        } catch (const std::exception& e) {
            a_star_problem = std::string(exclusion::failed) + ": " + e.what();
        }

        TerminalSample sample;
        McConfig local = mc;
        local.stream = static_cast<std::uint32_t>(combo);
        try {
            sample = simulate_terminal(model, t, local);
        } catch (const std::exception& e) {
            for (auto& r : rows) exclude(r, std::string(exclusion::failed) + ": " + e.what());
            return;
        }

        const Smile& sx = smiles_x[it * nx + ix];
        const Smile& sy = smiles_y[it * ny + iy];
        std::size_t idx = 0;
        for (double s : spec.s0y) {
            PriceEstimate est;
            std::string point_problem;
            try {
                est = estimate_exchange(sample, model, spec.s0x, s, local);
            } catch (const std::exception& e) {
                point_problem = std::string(exclusion::failed) + ": " + e.what();
            }
            const bool a_out = !std::isfinite(a_star) || a_star < -1.0 || a_star > 2.0;
            const double gamma_hat =
                point_problem.empty() ? gamma_hat_or_nan(est.value, spec.s0x, s, t) : kNaN;
            for (const auto& conv : spec.conventions) {
                ResultRow& row = rows[idx++];
                if (!point_problem.empty()) {
                    exclude(row, point_problem);
                    continue;
                }
                row.mc_price = est.value;
                row.mc_stderr = est.std_error;
                if (est.value < spec.min_mc_price) {
                    exclude(row, exclusion::below_min_price);
                    continue;
                }
                if (spec.a_star_filter && a_out) {
                    exclude(row, exclusion::a_star_out_of_range);
                    continue;
                }
                const bool needs_a_star = conv.kind != ConventionChoice::Kind::fixed;
                if (needs_a_star && !a_star_problem.empty()) {
                    exclude(row, a_star_problem);
                    continue;
                }
                try {
                    price_convention(row, conv.resolve(a_star), spec.s0x, s, rho, t, sx, sy, gamma_hat);
                } catch (const std::exception& e) {
                    exclude(row, std::string(exclusion::failed) + ": " + e.what());
                }
            }
        }
    });

    std::vector<ResultRow> out;
    out.reserve(n_combo * spec.s0y.size() * spec.conventions.size());
    for (auto& rows : per_combo) {
        for (auto& r : rows) out.push_back(std::move(r));
    }
    return out;
}

ErrorReport compute_metrics(const std::vector<ResultRow>& rows, const MetricOptions& options) {
    for (const auto& g : options.grouping) {
        if (g != "T" && g != "rho" && g != "rho_X" && g != "rho_Y" && g != "s0Y") {
            throw InputError("metrics: unknown grouping field '" + g + "'");
        }
    }
    ErrorReport report;
    report.options = options;

    std::vector<std::string> conv_order;
    for (const auto& r : rows) {
        if (std::find(conv_order.begin(), conv_order.end(), r.convention) == conv_order.end()) {
            conv_order.push_back(r.convention);
        }
    }

    // a* per point, from the a-star rows.
    std::map<PointKey, double> a_star_at;
    bool have_a_star = false;
    for (const auto& r : rows) {
        if (r.convention == "a-star") {
            have_a_star = true;
            a_star_at[point_key(r)] = r.a_value;
        }
    }

    std::vector<std::string> variants{"included"};
    if (have_a_star) variants.emplace_back("a_star_in_range");

    using GroupKey = std::vector<double>;
    std::map<std::tuple<GroupKey, std::size_t, std::size_t>, std::vector<const ResultRow*>> members;
    std::set<GroupKey> groups;
    for (const auto& r : rows) {
        GroupKey gk;
        for (const auto& g : options.grouping) gk.push_back(field(r, g));
        groups.insert(gk);
        const std::size_t ci = static_cast<std::size_t>(
            std::find(conv_order.begin(), conv_order.end(), r.convention) - conv_order.begin());
        for (std::size_t vi = 0; vi < variants.size(); ++vi) members[{gk, ci, vi}].push_back(&r);
    }

    for (const auto& gk : groups) {
        for (std::size_t ci = 0; ci < conv_order.size(); ++ci) {
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                ReportEntry entry;
                for (std::size_t i = 0; i < options.grouping.size(); ++i) {
                    entry.key[options.grouping[i]] = gk[i];
                }
                entry.convention = conv_order[ci];
                entry.variant = variants[vi];
                std::vector<const ResultRow*> included;
                const auto it = members.find({gk, ci, vi});
                if (it != members.end()) {
                    for (const ResultRow* r : it->second) {
                        ++entry.total;
                        if (r->excluded) {
                            ++entry.excluded[reason_class(r->exclusion_reason)];
                            continue;
                        }
                        if (!std::isfinite(r->error) || !std::isfinite(r->mc_price)) {
                            ++entry.excluded[exclusion::failed];
                            continue;
                        }
                        if (vi == 1) {
                            const auto a = a_star_at.find(point_key(*r));
                            if (a == a_star_at.end() || !std::isfinite(a->second) || a->second < -1.0 ||
                                a->second > 2.0) {
                                ++entry.excluded[exclusion::a_star_out_of_range];
                                continue;
                            }
                        }
                        included.push_back(r);
                    }
                }
                entry.metrics = summarize(included, options);
                report.entries.push_back(std::move(entry));
            }
        }
    }
    return report;
}

void write_report_json(std::ostream& os, const ErrorReport& report) {
    nlohmann::ordered_json j;
    j["grouping"] = report.options.grouping;
    j["s0X"] = report.options.s0x;
    j["mstd"] = report.options.mstd_signed ? "signed" : "absolute";
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json je;
        je["group"] = nlohmann::ordered_json::object();
        for (const auto& g : report.options.grouping) je["group"][g] = e.key.at(g);
        je["convention"] = e.convention;
        je["variant"] = e.variant;
        je["total"] = e.total;
        je["included"] = e.metrics.n;
        je["excluded"] = nlohmann::ordered_json::object();
        for (const auto& [reason, count] : e.excluded) je["excluded"][reason] = count;
        je["empty"] = e.metrics.empty;
        if (e.metrics.empty) {
            je["metrics"] = nullptr;
        } else {
            je["metrics"] = {{"MAE", num_or_null(e.metrics.mae)},
                             {"MAPE", num_or_null(e.metrics.mape)},
                             {"RMSE", num_or_null(e.metrics.rmse)},
                             {"MaxAE", num_or_null(e.metrics.max_ae)},
                             {"MStd", num_or_null(e.metrics.mstd)},
                             {"ATM_error", num_or_null(e.metrics.atm_error)},
                             {"ATM_n", e.metrics.atm_n}};
        }
        j["entries"].push_back(std::move(je));
    }
    if (report.entries.empty()) j["empty"] = true;
    os << j.dump(2) << '\n';
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << format_double(r.maturity) << ',' << format_double(r.rho) << ',' << format_double(r.rho_x)
           << ',' << format_double(r.rho_y) << ',' << format_double(r.s0y) << ',' << r.convention << ','
           << format_double(r.a_value) << ',' << format_double(r.k_x) << ',' << format_double(r.k_y)
           << ',' << format_double(r.i_x) << ',' << format_double(r.i_y) << ','
           << format_double(r.margrabe_price) << ',' << format_double(r.mc_price) << ','
           << format_double(r.mc_stderr) << ',' << format_double(r.error) << ','
           << format_double(r.implied_corr) << ',' << (r.excluded ? 1 : 0) << ','
           << sanitize(r.exclusion_reason) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
    std::string line;
    std::vector<ResultRow> rows;
    if (!std::getline(is, line)) return rows;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw InputError("results csv: unexpected header");
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 18) {
            throw InputError("results csv: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " fields, expected 18");
        }
        auto num = [&](std::size_t i, bool required) {
            if (cells[i].empty()) {
                if (required) {
                    throw InputError("results csv: line " + std::to_string(line_no) + " missing field " +
                                     std::to_string(i + 1));
                }
                return kNaN;
            }
            double v = 0.0;
            if (!parse_double(cells[i], v)) {
                throw InputError("results csv: line " + std::to_string(line_no) + " bad number '" +
                                 cells[i] + "'");
            }
            return v;
        };
        ResultRow r;
        r.maturity = num(0, true);
        r.rho = num(1, true);
        r.rho_x = num(2, true);
        r.rho_y = num(3, true);
        r.s0y = num(4, true);
        r.convention = cells[5];
        r.a_value = num(6, false);
        r.k_x = num(7, false);
        r.k_y = num(8, false);
        r.i_x = num(9, false);
        r.i_y = num(10, false);
        r.margrabe_price = num(11, false);
        r.mc_price = num(12, false);
        r.mc_stderr = num(13, false);
        r.error = num(14, false);
        r.implied_corr = num(15, false);
        if (cells[16] != "0" && cells[16] != "1") {
            throw InputError("results csv: line " + std::to_string(line_no) + " bad excluded flag");
        }
        r.excluded = cells[16] == "1";
        r.exclusion_reason = cells[17];
        rows.push_back(std::move(r));
    }
    return rows;
}

PlotKind parse_plot_kind(const std::string& name) {
    if (name == "skew") return PlotKind::skew;
    if (name == "implied_corr") return PlotKind::implied_corr;
    if (name == "ratio") return PlotKind::ratio;
    if (name == "difference") return PlotKind::difference;
    if (name == "moneyness_error") return PlotKind::moneyness_error;
    throw InputError("unknown plot kind '" + name +
                     "' (expected skew, implied_corr, ratio, difference or moneyness_error)");
}

void emit_plot_data(std::ostream& os, PlotKind kind, const std::vector<ResultRow>& rows,
                    const std::vector<Smile>& smiles) {
    os << "group,series,x,y\n";
    if (kind == PlotKind::skew) {
        for (const auto& s : smiles) {
            const std::string group = "T=" + format_double(s.maturity());
            for (const auto& p : s.points()) {
                os << group << ',' << sanitize(s.label()) << ',' << format_double(std::exp(p.log_strike))
                   << ',' << format_double(p.implied_vol) << '\n';
            }
        }
        return;
    }
    if (kind == PlotKind::moneyness_error) {
        std::vector<std::string> conv_order;
        std::map<std::tuple<double, std::size_t, double>, std::pair<double, std::size_t>> acc;
        for (const auto& r : rows) {
            if (r.excluded || !std::isfinite(r.error)) continue;
            auto it = std::find(conv_order.begin(), conv_order.end(), r.convention);
            if (it == conv_order.end()) it = conv_order.insert(conv_order.end(), r.convention);
            auto& a = acc[{r.maturity, static_cast<std::size_t>(it - conv_order.begin()), r.s0y}];
            a.first += std::abs(r.error);
            ++a.second;
        }
        for (const auto& [key, a] : acc) {
            os << "T=" << format_double(std::get<0>(key)) << ',' << conv_order[std::get<1>(key)] << ','
               << format_double(std::get<2>(key)) << ','
               << format_double(a.first / static_cast<double>(a.second)) << '\n';
        }
        return;
    }
    for (const auto& r : rows) {
        if (r.excluded) continue;
        double y = kNaN;
        switch (kind) {
            case PlotKind::implied_corr:
                y = r.implied_corr;
                break;
            case PlotKind::ratio:
                y = r.margrabe_price / r.mc_price;
                break;
            case PlotKind::difference:
                y = r.error;
                break;
            default:
                break;
        }
        if (!std::isfinite(y)) continue;
        os << "T=" << format_double(r.maturity) << ";rho=" << format_double(r.rho)
           << ";rho_X=" << format_double(r.rho_x) << ";rho_Y=" << format_double(r.rho_y) << ','
           << r.convention << ',' << format_double(r.s0y) << ',' << format_double(y) << '\n';
    }
}

}  // namespace strikeconv
