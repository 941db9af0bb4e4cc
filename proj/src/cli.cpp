#include "strikeconv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strikeconv/convention.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/experiments.hpp"
#include "strikeconv/format.hpp"
#include "strikeconv/margrabe.hpp"
#include "strikeconv/parallel.hpp"

namespace strikeconv {

namespace {

using json = nlohmann::ordered_json;

struct RunConfig {
    TwoAssetModel model = test_case_model(1);
    double maturity = 0.05;
    McConfig mc;
    SkewMeasurement skew;
    int smile_points = 41;
    GridSpec grid;  ///< heston, mc, skew and smile_points come from the fields above
    int jobs = default_jobs();
    std::string out_dir;

    GridSpec effective_grid() const {
        GridSpec g = grid;
        g.heston = model.heston;
        g.mc = mc;
        g.mc.jobs = jobs;
        g.skew = skew;
        g.smile_points = smile_points;
        return g;
    }
    McConfig effective_mc() const {
        McConfig m = mc;
        m.jobs = jobs;
        return m;
    }
};

// ---- config file -----------------------------------------------------------

using FieldSetter = std::function<void(const json&, const std::string&)>;

void read_object(const json& j, const std::string& where, const std::map<std::string, FieldSetter>& fields) {
    if (!j.is_object()) throw InputError("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto f = fields.find(it.key());
        const std::string path = where.empty() ? it.key() : where + "." + it.key();
        if (f == fields.end()) throw InputError("config: unknown key '" + path + "'");
        f->second(it.value(), path);
    }
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw InputError("config: '" + path + "' must be a number");
    return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw InputError("config: '" + path + "' must be true or false");
    return j.get<bool>();
}

long long as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw InputError("config: '" + path + "' must be an integer");
    return j.get<long long>();
}

std::vector<double> as_doubles(const json& j, const std::string& path) {
    if (!j.is_array()) throw InputError("config: '" + path + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(as_double(v, path));
    return out;
}

FieldSetter set_double(double& target) {
    return [&target](const json& j, const std::string& p) { target = as_double(j, p); };
}

FieldSetter set_bool(bool& target) {
    return [&target](const json& j, const std::string& p) { target = as_bool(j, p); };
}

FieldSetter set_doubles(std::vector<double>& target) {
    return [&target](const json& j, const std::string& p) { target = as_doubles(j, p); };
}

FieldSetter set_asset(AssetSpec& a) {
    return [&a](const json& j, const std::string& p) {
        read_object(j, p, {{"lambda", set_double(a.lambda)},
                           {"rho_sv", set_double(a.rho_sv)},
                           {"s0", set_double(a.s0)}});
    };
}

void load_config(RunConfig& cfg, const json& root) {
    auto& m = cfg.model;
    auto& g = cfg.grid;
    read_object(root, "", {
        {"model", [&](const json& j, const std::string& p) {
             read_object(j, p, {
                 {"heston", [&](const json& h, const std::string& hp) {
                      read_object(h, hp, {{"kappa", set_double(m.heston.kappa)},
                                          {"theta", set_double(m.heston.theta)},
                                          {"nu", set_double(m.heston.nu)},
                                          {"sigma0", set_double(m.heston.sigma0)}});
                  }},
                 {"x", set_asset(m.x)},
                 {"y", set_asset(m.y)},
                 {"rho", set_double(m.rho)},
             });
         }},
        {"maturity", set_double(cfg.maturity)},
        {"mc", [&](const json& j, const std::string& p) {
             read_object(j, p, {
                 {"n_paths", [&](const json& v, const std::string& vp) {
                      const auto n = as_int(v, vp);
                      if (n < 2) throw InputError("config: '" + vp + "' must be at least 2");
                      cfg.mc.n_paths = static_cast<std::size_t>(n);
                  }},
                 {"steps_per_year", [&](const json& v, const std::string& vp) {
                      cfg.mc.steps_per_year = static_cast<int>(as_int(v, vp));
                  }},
                 {"brownian_substeps", [&](const json& v, const std::string& vp) {
                      cfg.mc.brownian_substeps = static_cast<int>(as_int(v, vp));
                  }},
                 {"seed", [&](const json& v, const std::string& vp) {
                      if (!v.is_number_unsigned()) throw InputError("config: '" + vp + "' must be >= 0");
                      cfg.mc.seed = v.get<std::uint64_t>();
                  }},
                 {"stream", [&](const json& v, const std::string& vp) {
                      if (!v.is_number_unsigned()) throw InputError("config: '" + vp + "' must be >= 0");
                      cfg.mc.stream = v.get<std::uint32_t>();
                  }},
                 {"use_control_variate", set_bool(cfg.mc.use_control_variate)},
                 {"estimate_beta", set_bool(cfg.mc.estimate_beta)},
             });
         }},
        {"skew_step", set_double(cfg.skew.log_strike_step)},
        {"smile_points", [&](const json& v, const std::string& vp) {
             cfg.smile_points = static_cast<int>(as_int(v, vp));
         }},
        {"grid", [&](const json& j, const std::string& p) {
             read_object(j, p, {
                 {"maturities", set_doubles(g.maturities)},
                 {"s0x", set_double(g.s0x)},
                 {"s0y", set_doubles(g.s0y)},
                 {"lambda_x", set_double(g.lambda_x)},
                 {"lambda_y", set_double(g.lambda_y)},
                 {"rho", set_doubles(g.rho)},
                 {"rho_x", set_doubles(g.rho_x)},
                 {"rho_y", set_doubles(g.rho_y)},
                 {"conventions", [&](const json& v, const std::string& vp) {
                      if (!v.is_array()) throw InputError("config: '" + vp + "' must be an array");
                      g.conventions.clear();
                      for (const auto& c : v) {
                          if (!c.is_string()) throw InputError("config: '" + vp + "' entries must be strings");
                          g.conventions.push_back(parse_convention(c.get<std::string>()));
                      }
                  }},
                 {"min_mc_price", set_double(g.min_mc_price)},
                 {"a_star_filter", set_bool(g.a_star_filter)},
                 {"a_star_from_observables", set_bool(g.a_star_from_observables)},
             });
         }},
        {"jobs", [&](const json& v, const std::string& vp) { cfg.jobs = static_cast<int>(as_int(v, vp)); }},
        {"out", [&](const json& v, const std::string& vp) {
             if (!v.is_string()) throw InputError("config: '" + vp + "' must be a string");
             cfg.out_dir = v.get<std::string>();
         }},
    });
}

json asset_json(const AssetSpec& a) {
    return json{{"lambda", a.lambda}, {"rho_sv", a.rho_sv}, {"s0", a.s0}};
}

json config_json(const RunConfig& cfg) {
    const auto& m = cfg.model;
    const auto& g = cfg.grid;
    json conv = json::array();
    for (const auto& c : g.conventions) conv.push_back(c.name());
    json j;
    j["model"] = {{"heston",
                   {{"kappa", m.heston.kappa},
                    {"theta", m.heston.theta},
                    {"nu", m.heston.nu},
                    {"sigma0", m.heston.sigma0}}},
                  {"x", asset_json(m.x)},
                  {"y", asset_json(m.y)},
                  {"rho", m.rho}};
    j["maturity"] = cfg.maturity;
    j["mc"] = {{"n_paths", cfg.mc.n_paths},
               {"steps_per_year", cfg.mc.steps_per_year},
               {"brownian_substeps", cfg.mc.brownian_substeps},
               {"seed", cfg.mc.seed},
               {"stream", cfg.mc.stream},
               {"use_control_variate", cfg.mc.use_control_variate},
               {"estimate_beta", cfg.mc.estimate_beta}};
    j["skew_step"] = cfg.skew.log_strike_step;
    j["smile_points"] = cfg.smile_points;
    j["grid"] = {{"maturities", g.maturities},
                 {"s0x", g.s0x},
                 {"s0y", g.s0y},
                 {"lambda_x", g.lambda_x},
                 {"lambda_y", g.lambda_y},
                 {"rho", g.rho},
                 {"rho_x", g.rho_x},
                 {"rho_y", g.rho_y},
                 {"conventions", conv},
                 {"min_mc_price", g.min_mc_price},
                 {"a_star_filter", g.a_star_filter},
                 {"a_star_from_observables", g.a_star_from_observables}};
    j["jobs"] = cfg.jobs;
    j["out"] = cfg.out_dir;
    return j;
}

void validate_config(const RunConfig& cfg) {
    cfg.model.validate();
    if (!std::isfinite(cfg.maturity) || !(cfg.maturity > 0.0)) throw InputError("maturity must be positive");
    cfg.effective_mc().validate();
    if (cfg.jobs < 1) throw InputError("jobs must be positive");
    if (!(cfg.skew.log_strike_step > 0.0)) throw InputError("skew_step must be positive");
    if (cfg.smile_points < 4) throw InputError("smile_points must be at least 4");
    cfg.effective_grid().validate();
}

// ---- output helpers --------------------------------------------------------

void kv(std::ostream& os, const std::string& key, double v) {
    os << key << '=' << (std::isnan(v) ? std::string("nan") : format_double(v)) << '\n';
}

void kv(std::ostream& os, const std::string& key, const std::string& v) { os << key << '=' << v << '\n'; }

std::filesystem::path output_file(const RunConfig& cfg, const std::string& name) {
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    return dir / name;
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    writer(os);
    if (!os) throw InputError("error writing '" + path.string() + "'");
}

Smile leg_smile(const RunConfig& cfg, const AssetSpec& a, const std::string& label) {
    return build_smile(cfg.model.heston, a, cfg.maturity, default_log_strike_grid(a.s0, cfg.smile_points),
                       label, cfg.jobs);
}

// ---- commands --------------------------------------------------------------

void cmd_price_exchange(const RunConfig& cfg, const std::string& token, std::ostream& out) {
    const auto conv = parse_convention(token);
    const auto& m = cfg.model;
    const double t = cfg.maturity;
    const Smile sx = leg_smile(cfg, m.x, "X");
    const Smile sy = leg_smile(cfg, m.y, "Y");
    double a_star = std::numeric_limits<double>::quiet_NaN();
    if (conv.kind != ConventionChoice::Kind::fixed) {
        a_star = a_star_observables(measure_atm_observables(m.heston, m.x, m.y, t, cfg.skew), m.rho);
    }
    const double a = conv.resolve(a_star);
    const double x = std::log(m.x.s0);
    const double y = std::log(m.y.s0);
    const auto k = strikes(LinearConvention{a, false}, x, y);
    const double ix = sx.vol_at(k.k_x);
    const double iy = sy.vol_at(k.k_y);
    const double gamma = convention_gamma(ix, iy, m.rho);
    const double price = margrabe_price(x, y, gamma, t);
    kv(out, "convention", conv.name());
    kv(out, "a", a);
    if (conv.kind != ConventionChoice::Kind::fixed) kv(out, "a_star", a_star);
    kv(out, "s0x", m.x.s0);
    kv(out, "s0y", m.y.s0);
    kv(out, "T", t);
    kv(out, "strike_x", std::exp(k.k_x));
    kv(out, "strike_y", std::exp(k.k_y));
    kv(out, "vol_x", ix);
    kv(out, "vol_y", iy);
    kv(out, "gamma", gamma);
    kv(out, "price", price);
}

void cmd_price_mc(const RunConfig& cfg, std::ostream& out) {
    const auto& m = cfg.model;
    const double t = cfg.maturity;
    const auto mc = cfg.effective_mc();
    const auto est = simulate_exchange(m, t, mc);
    kv(out, "s0x", m.x.s0);
    kv(out, "s0y", m.y.s0);
    kv(out, "T", t);
    kv(out, "price", est.value);
    kv(out, "stderr", est.std_error);
    kv(out, "n_paths", static_cast<double>(est.n_paths));
    kv(out, "seed", std::to_string(est.seed));
    kv(out, "stream", std::to_string(est.stream));
    kv(out, "n_steps", est.n_steps);
    kv(out, "beta", est.beta);
    // Implied correlation against the own-ATM leg vols.
    const double ix = heston_implied_vol(m.heston, m.x, m.x.s0, t);
    const double iy = heston_implied_vol(m.heston, m.y, m.y.s0, t);
    kv(out, "vol_x", ix);
    kv(out, "vol_y", iy);
    double gamma_hat = std::numeric_limits<double>::quiet_NaN();
    try {
        gamma_hat = exchange_implied_vol(est.value, std::log(m.x.s0), std::log(m.y.s0), t);
    } catch (const DomainError&) {
    }
    kv(out, "gamma_hat", gamma_hat);
    const double rho_hat = std::isfinite(gamma_hat) ? implied_correlation(gamma_hat, ix, iy).value
                                                    : std::numeric_limits<double>::quiet_NaN();
    kv(out, "implied_corr", rho_hat);
}

void cmd_surface(const RunConfig& cfg, std::ostream& out) {
    const Smile sx = leg_smile(cfg, cfg.model.x, "X");
    const Smile sy = leg_smile(cfg, cfg.model.y, "Y");
    auto write = [&](std::ostream& os) {
        write_smile_csv(os, sx, true);
        write_smile_csv(os, sy, false);
    };
    if (cfg.out_dir.empty()) {
        write(out);
        return;
    }
    const auto path = output_file(cfg, "smiles.csv");
    write_file(path, write);
    kv(out, "wrote", path.string());
}

struct ObservableFlags {
    CLI::Option* ix = nullptr;
    CLI::Option* iy = nullptr;
    CLI::Option* sx = nullptr;
    CLI::Option* sy = nullptr;
    SmileObservables values;
};

void cmd_convention_solve(const RunConfig& cfg, const ObservableFlags& flags, std::ostream& out) {
    const auto& m = cfg.model;
    const ModelLimits limits{m.x.lambda, m.y.lambda, m.rho, m.x.rho_sv, m.y.rho_sv};
    kv(out, "lambda_x", limits.lambda_x);
    kv(out, "lambda_y", limits.lambda_y);
    kv(out, "rho", limits.rho);
    kv(out, "rho_x", limits.rho_x);
    kv(out, "rho_y", limits.rho_y);
    try {
        const double a = a_star_parametric(limits);
        kv(out, "a_star_parametric", a);
        kv(out, "a_star_parametric_bounded", bound_a(a));
    } catch (const DegenerateConventionError&) {
        kv(out, "a_star_parametric", "degenerate");
    }

    const int given = (flags.ix->count() > 0) + (flags.iy->count() > 0) + (flags.sx->count() > 0) +
                      (flags.sy->count() > 0);
    if (given != 0 && given != 4) throw InputError("--ix, --iy, --sx and --sy must be given together");
    SmileObservables obs;
    if (given == 4) {
        obs = flags.values;
        obs.maturity = cfg.maturity;
        kv(out, "observables", "given");
    } else {
        obs = measure_atm_observables(m.heston, m.x, m.y, cfg.maturity, cfg.skew);
        kv(out, "observables", "measured");
        kv(out, "T", cfg.maturity);
        kv(out, "skew_step", cfg.skew.log_strike_step);
    }
    kv(out, "atm_level_x", obs.atm_level_x);
    kv(out, "atm_level_y", obs.atm_level_y);
    kv(out, "atm_skew_x", obs.atm_skew_x);
    kv(out, "atm_skew_y", obs.atm_skew_y);
    try {
        const double a = a_star_observables(obs, m.rho);
        kv(out, "a_star_observables", a);
        kv(out, "a_star_observables_bounded", bound_a(a));
    } catch (const DegenerateConventionError&) {
        kv(out, "a_star_observables", "degenerate");
    }
}

MetricOptions metric_options(const std::string& group_by, const std::string& mstd, double s0x) {
    MetricOptions mo;
    mo.s0x = s0x;
    std::stringstream ss(group_by);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) mo.grouping.push_back(item);
    }
    if (mstd == "signed") {
        mo.mstd_signed = true;
    } else if (mstd == "absolute") {
        mo.mstd_signed = false;
    } else {
        throw InputError("--mstd must be signed or absolute");
    }
    return mo;
}

void cmd_experiment_run(const RunConfig& cfg, bool dry_run, int case_id, const MetricOptions& mo,
                        std::ostream& out) {
    if (case_id != 0) {
        if (dry_run) throw InputError("--dry-run applies to the grid, not to --case");
        TestCaseOptions opt;
        opt.mc = cfg.effective_mc();
        opt.skew = cfg.skew;
        opt.smile_points = cfg.smile_points;
        const auto res = run_test_case(case_id, opt);
        const std::string stem = "test_case_" + std::to_string(case_id);
        if (cfg.out_dir.empty()) {
            write_results_csv(out, res.rows);
            return;
        }
        write_file(output_file(cfg, stem + ".csv"), [&](std::ostream& os) { write_results_csv(os, res.rows); });
        const std::vector<Smile> smiles{res.smile_x, res.smile_y};
        for (const char* kind : {"skew", "implied_corr", "ratio", "difference"}) {
            write_file(output_file(cfg, stem + "_" + kind + ".csv"), [&](std::ostream& os) {
                emit_plot_data(os, parse_plot_kind(kind), res.rows, smiles);
            });
        }
        kv(out, "case", case_id);
        kv(out, "a_star", res.a_star);
        kv(out, "a_star_parametric", res.a_star_parametric);
        kv(out, "atm_level_x", res.observables.atm_level_x);
        kv(out, "atm_level_y", res.observables.atm_level_y);
        kv(out, "atm_skew_x", res.observables.atm_skew_x);
        kv(out, "atm_skew_y", res.observables.atm_skew_y);
        std::map<std::string, double> max_err;
        for (const auto& r : res.rows) max_err[r.convention] = std::max(max_err[r.convention], std::abs(r.error));
        for (const auto& [conv, e] : max_err) kv(out, "max_abs_error[" + conv + "]", e);
        kv(out, "wrote", output_file(cfg, stem + ".csv").string());
        return;
    }

    const GridSpec grid = cfg.effective_grid();
    const auto counts = count_grid(grid);
    if (dry_run) {
        kv(out, "triples", static_cast<double>(counts.triples));
        kv(out, "invalid_triples", static_cast<double>(counts.invalid_triples));
        kv(out, "invalid_fraction",
           counts.triples ? static_cast<double>(counts.invalid_triples) / counts.triples : 0.0);
        kv(out, "points", static_cast<double>(counts.points));
        kv(out, "invalid_points", static_cast<double>(counts.invalid_points));
        kv(out, "points_to_simulate", static_cast<double>(counts.points - counts.invalid_points));
        return;
    }
    const auto rows = run_grid(grid);
    if (cfg.out_dir.empty()) {
        write_results_csv(out, rows);
        return;
    }
    const auto report = compute_metrics(rows, mo);
    write_file(output_file(cfg, "results.csv"), [&](std::ostream& os) { write_results_csv(os, rows); });
    write_file(output_file(cfg, "report.json"), [&](std::ostream& os) { write_report_json(os, report); });
    write_file(output_file(cfg, "moneyness_error.csv"),
               [&](std::ostream& os) { emit_plot_data(os, PlotKind::moneyness_error, rows); });
    kv(out, "points", static_cast<double>(counts.points));
    kv(out, "invalid_points", static_cast<double>(counts.invalid_points));
    kv(out, "rows", static_cast<double>(rows.size()));
    kv(out, "wrote", output_file(cfg, "results.csv").string());
}

std::vector<ResultRow> load_results(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot read results file '" + path + "'");
    return read_results_csv(is);
}

void cmd_experiment_report(const RunConfig& cfg, const std::string& results, const MetricOptions& mo,
                           std::ostream& out) {
    const auto report = compute_metrics(load_results(results), mo);
    write_report_json(out, report);
    if (!cfg.out_dir.empty()) {
        write_file(output_file(cfg, "report.json"), [&](std::ostream& os) { write_report_json(os, report); });
    }
}

void cmd_experiment_plot(const RunConfig& cfg, const std::string& results, const std::string& kind_name,
                         std::ostream& out) {
    const PlotKind kind = parse_plot_kind(kind_name);
    const auto rows = load_results(results);
    if (cfg.out_dir.empty()) {
        emit_plot_data(out, kind, rows);
        return;
    }
    const auto path = output_file(cfg, "plot_" + kind_name + ".csv");
    write_file(path, [&](std::ostream& os) { emit_plot_data(os, kind, rows); });
    kv(out, "wrote", path.string());
}

// Model overrides shared by the pricing-style commands.
struct ModelFlags {
    CLI::Option* case_id = nullptr;
    CLI::Option* s0x = nullptr;
    CLI::Option* s0y = nullptr;
    CLI::Option* maturity = nullptr;
    int case_value = 1;
    double s0x_value = 100.0;
    double s0y_value = 100.0;
    double maturity_value = 0.05;

    void add(CLI::App* app) {
        case_id = app->add_option("--case", case_value, "Use the model of test case 1 or 2")
                      ->check(CLI::IsMember({1, 2}));
        s0x = app->add_option("--s0x", s0x_value, "Spot of asset X");
        s0y = app->add_option("--s0y", s0y_value, "Spot of asset Y");
        maturity = app->add_option("-T,--maturity", maturity_value, "Maturity in years");
    }

    void apply(RunConfig& cfg) const {
        if (case_id && case_id->count()) cfg.model = test_case_model(case_value);
        if (s0x && s0x->count()) cfg.model.x.s0 = s0x_value;
        if (s0y && s0y->count()) cfg.model.y.s0 = s0y_value;
        if (maturity && maturity->count()) cfg.maturity = maturity_value;
    }
};

struct McFlags {
    CLI::Option* paths = nullptr;
    CLI::Option* steps = nullptr;
    CLI::Option* no_cv = nullptr;
    std::size_t paths_value = 0;
    int steps_value = 0;

    void add(CLI::App* app) {
        paths = app->add_option("--paths", paths_value, "Monte Carlo paths");
        steps = app->add_option("--steps-per-year", steps_value, "Time steps per year");
        no_cv = app->add_flag("--no-control-variate", "Disable the control variate");
    }

    void apply(RunConfig& cfg) const {
        if (paths && paths->count()) cfg.mc.n_paths = paths_value;
        if (steps && steps->count()) cfg.mc.steps_per_year = steps_value;
        if (no_cv && no_cv->count()) cfg.mc.use_control_variate = false;
    }
};

int fail(std::ostream& err, const char* kind, const std::string& message, int code) {
    std::string msg = message;
    for (char& c : msg) {
        if (c == '\n') c = ' ';
    }
    err << "error: kind=" << kind << " message=" << msg << '\n';
    return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exchange-option pricing with strike conventions under the 1V2L Heston model",
                 "strikeconv"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string out_dir;
    bool print_config = false;
    auto* opt_config = app.add_option("--config", config_path, "JSON configuration file");
    auto* opt_seed = app.add_option("--seed", seed, "Random seed for every Monte Carlo run");
    auto* opt_jobs = app.add_option("--jobs", jobs, "Worker threads (default: available cores)")
                         ->check(CLI::PositiveNumber);
    auto* opt_out = app.add_option("--out", out_dir, "Output directory for written files");
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

    ModelFlags model_flags;
    McFlags mc_flags;

    auto* price = app.add_subcommand("price", "Price an exchange option");
    price->require_subcommand(1);
    auto* price_exchange = price->add_subcommand("exchange", "Margrabe price under a strike convention");
    std::string convention_token;
    price_exchange->add_option("--convention", convention_token,
                               "atm | lookup | a=<value> | a-star | a-star-bounded")
        ->required();
    model_flags.add(price_exchange);
    auto* price_mc = price->add_subcommand("mc", "Monte Carlo price of the exchange option");
    ModelFlags mc_model_flags;
    mc_model_flags.add(price_mc);
    mc_flags.add(price_mc);

    auto* surface = app.add_subcommand("surface", "Write implied-vol smiles of both legs as CSV");
    ModelFlags surface_flags;
    surface_flags.add(surface);
    int points = 0;
    auto* opt_points = surface->add_option("--points", points, "Strikes per smile")->check(CLI::Range(4, 10001));

    auto* convention = app.add_subcommand("convention", "Strike-convention tools");
    convention->require_subcommand(1);
    auto* solve = convention->add_subcommand("solve", "Optimal log-linear convention a*");
    ModelFlags solve_flags;
    solve_flags.add(solve);
    double lx = 0, ly = 0, rho = 0, rx = 0, ry = 0, dz = 0;
    auto* opt_lx = solve->add_option("--lambda-x", lx);
    auto* opt_ly = solve->add_option("--lambda-y", ly);
    auto* opt_rho = solve->add_option("--rho", rho);
    auto* opt_rx = solve->add_option("--rho-x", rx);
    auto* opt_ry = solve->add_option("--rho-y", ry);
    auto* opt_dz = solve->add_option("--skew-step", dz, "Log-strike step of the skew difference");
    ObservableFlags obs_flags;
    obs_flags.ix = solve->add_option("--ix", obs_flags.values.atm_level_x, "ATM implied vol of X");
    obs_flags.iy = solve->add_option("--iy", obs_flags.values.atm_level_y, "ATM implied vol of Y");
    obs_flags.sx = solve->add_option("--sx", obs_flags.values.atm_skew_x, "ATM skew of X");
    obs_flags.sy = solve->add_option("--sy", obs_flags.values.atm_skew_y, "ATM skew of Y");

    auto* experiment = app.add_subcommand("experiment", "Test cases and the parameter sweep");
    experiment->require_subcommand(1);
    auto* run = experiment->add_subcommand("run", "Run a test case or the grid");
    bool dry_run = false;
    int case_id = 0;
    std::string group_by = "T,rho";
    std::string mstd = "signed";
    run->add_flag("--dry-run", dry_run, "Count grid points and exclusions without simulating");
    run->add_option("--case", case_id, "Run test case 1 or 2 instead of the grid")->check(CLI::IsMember({1, 2}));
    run->add_option("--group-by", group_by, "Comma-separated report grouping fields");
    run->add_option("--mstd", mstd, "signed | absolute");
    McFlags run_mc_flags;
    run_mc_flags.add(run);
    auto* report = experiment->add_subcommand("report", "Recompute metrics from a results CSV");
    std::string results_path;
    report->add_option("--results", results_path, "Results CSV")->required();
    report->add_option("--group-by", group_by, "Comma-separated report grouping fields");
    report->add_option("--mstd", mstd, "signed | absolute");
    auto* plot = experiment->add_subcommand("plot", "Plot-ready CSV from a results CSV");
    std::string plot_kind;
    plot->add_option("--results", results_path, "Results CSV")->required();
    plot->add_option("--kind", plot_kind, "skew | implied_corr | ratio | difference | moneyness_error")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (print_config && e.get_exit_code() == static_cast<int>(CLI::ExitCodes::RequiredError) &&
            app.get_subcommands().empty()) {
            // --print-config alone: fall through with defaults.
        } else {
            return fail(err, "input", e.what(), kExitInput);
        }
    }

    try {
        RunConfig cfg;
        if (opt_config->count()) {
            std::ifstream is(config_path);
            if (!is) throw InputError("cannot read config '" + config_path + "'");
            json root;
            try {
                root = json::parse(is);
            } catch (const json::exception& e) {
                throw InputError(std::string("config: ") + e.what());
            }
            load_config(cfg, root);
        }
        if (opt_seed->count()) cfg.mc.seed = seed;
        if (opt_jobs->count()) cfg.jobs = jobs;
        if (opt_out->count()) cfg.out_dir = out_dir;
        model_flags.apply(cfg);
        mc_model_flags.apply(cfg);
        mc_flags.apply(cfg);
        surface_flags.apply(cfg);
        solve_flags.apply(cfg);
        run_mc_flags.apply(cfg);
        if (opt_points->count()) cfg.smile_points = points;
        if (opt_lx->count()) cfg.model.x.lambda = lx;
        if (opt_ly->count()) cfg.model.y.lambda = ly;
        if (opt_rho->count()) cfg.model.rho = rho;
        if (opt_rx->count()) cfg.model.x.rho_sv = rx;
        if (opt_ry->count()) cfg.model.y.rho_sv = ry;
        if (opt_dz->count()) cfg.skew.log_strike_step = dz;
        validate_config(cfg);

        if (print_config) {
            out << config_json(cfg).dump(2) << '\n';
            return kExitOk;
        }

        if (price_exchange->parsed()) {
            cmd_price_exchange(cfg, convention_token, out);
        } else if (price_mc->parsed()) {
            cmd_price_mc(cfg, out);
        } else if (surface->parsed()) {
            cmd_surface(cfg, out);
        } else if (solve->parsed()) {
            cmd_convention_solve(cfg, obs_flags, out);
        } else if (run->parsed()) {
            cmd_experiment_run(cfg, dry_run, case_id, metric_options(group_by, mstd, cfg.grid.s0x), out);
        } else if (report->parsed()) {
            cmd_experiment_report(cfg, results_path, metric_options(group_by, mstd, cfg.grid.s0x), out);
        } else if (plot->parsed()) {
            cmd_experiment_plot(cfg, results_path, plot_kind, out);
        }
        return kExitOk;
    } catch (const NumericalError& e) {
        return fail(err, "numerical", e.what(), kExitNumerical);
    } catch (const InputError& e) {
        return fail(err, "input", e.what(), kExitInput);
    } catch (const DomainError& e) {
        return fail(err, "input", e.what(), kExitInput);
    } catch (const std::exception& e) {
        return fail(err, "numerical", e.what(), kExitNumerical);
    }
}

}  // namespace strikeconv
