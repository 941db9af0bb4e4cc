#pragma once

// Test cases and the parameter sweep for comparing strike conventions against
// Monte Carlo exchange prices, plus error metrics and plot-ready CSV.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "strikeconv/heston.hpp"
#include "strikeconv/simulation.hpp"

namespace strikeconv {

/// A strike convention as used by the harness and the CLI.
/// Tokens: "atm" (a = 0), "lookup" (a = 1), "a=<v>", "a-star", "a-star-bounded".
struct ConventionChoice {
    enum class Kind { fixed, a_star, a_star_bounded };
    Kind kind = Kind::fixed;
    double a = 0.0;  ///< used when kind == fixed

    std::string name() const;
    /// a for this convention given the point's a* (ignored for fixed).
    double resolve(double a_star) const;
};

ConventionChoice parse_convention(const std::string& token);
std::vector<ConventionChoice> default_conventions();

struct GridSpec {
    std::vector<double> maturities{0.05, 0.1, 0.25, 0.5, 1.0};
    double s0x = 100.0;
    std::vector<double> s0y{80, 84, 88, 92, 96, 100, 104, 108, 112, 116, 120};
    double lambda_x = 1.0;
    double lambda_y = 1.24;
    HestonParams heston;
    std::vector<double> rho{-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> rho_x{-0.72, -0.42, -0.12, 0.18, 0.48};
    std::vector<double> rho_y{-0.61, -0.31, -0.01, 0.29, 0.59};
    McConfig mc;
    std::vector<ConventionChoice> conventions = default_conventions();
    SkewMeasurement skew;
    int smile_points = 41;
    double min_mc_price = 0.01;          ///< points with a smaller MC price are excluded
    bool a_star_filter = false;          ///< exclude points whose a* lies outside [-1, 2]
    bool a_star_from_observables = true; ///< otherwise the parametric short-time a*

    void validate() const;
};

/// One (grid point, convention) row. NaN marks values that were not computed.
struct ResultRow {
    double maturity = 0.0;
    double rho = 0.0;
    double rho_x = 0.0;
    double rho_y = 0.0;
    double s0y = 0.0;
    std::string convention;
    double a_value = 0.0;
    double k_x = 0.0;
    double k_y = 0.0;
    double i_x = 0.0;
    double i_y = 0.0;
    double margrabe_price = 0.0;
    double mc_price = 0.0;
    double mc_stderr = 0.0;
    double error = 0.0;  ///< margrabe_price - mc_price
    double implied_corr = 0.0;
    bool excluded = false;
    std::string exclusion_reason;
};

namespace exclusion {
inline constexpr const char* invalid_correlation = "invalid_correlation";
inline constexpr const char* below_min_price = "mc_below_min_price";
inline constexpr const char* a_star_out_of_range = "a_star_out_of_range";
inline constexpr const char* degenerate_a_star = "degenerate_a_star";
inline constexpr const char* failed = "failed";
}  // namespace exclusion

struct TestCaseOptions {
    McConfig mc;
    std::vector<double> s0y;  ///< empty means 80, 82, ..., 120
    SkewMeasurement skew;
    int smile_points = 41;
    std::vector<ConventionChoice> conventions{parse_convention("atm"), parse_convention("lookup"),
                                              parse_convention("a-star")};
};

struct TestCaseResult {
    int case_id = 0;
    TwoAssetModel model;
    double maturity = 0.0;
    SmileObservables observables;
    double a_star = 0.0;
    double a_star_parametric = 0.0;
    Smile smile_x;
    Smile smile_y;
    std::vector<ResultRow> rows;
};

/// The two-asset model of test case 1 (rho_Y = -0.6) or 2 (rho_Y = 0.4).
TwoAssetModel test_case_model(int case_id);

/// Prices the exchange option over the S0^Y grid under each convention and
/// by Monte Carlo (one path set rescaled across S0^Y).
TestCaseResult run_test_case(int case_id, const TestCaseOptions& options = {});

struct GridCounts {
    std::size_t triples = 0;          ///< (rho, rho_X, rho_Y) combinations
    std::size_t invalid_triples = 0;
    std::size_t points = 0;           ///< (T, rho, rho_X, rho_Y, S0^Y)
    std::size_t invalid_points = 0;
};

/// Point counts and correlation exclusions; no simulation.
GridCounts count_grid(const GridSpec& spec);

/// Runs the sweep. Rows come sorted by (T, rho, rho_X, rho_Y, S0^Y,
/// convention order). Failures at a point are recorded in its rows.
std::vector<ResultRow> run_grid(const GridSpec& spec);

struct Metrics {
    std::size_t n = 0;
    double mae = 0.0;
    double mape = 0.0;
    double rmse = 0.0;
    double max_ae = 0.0;
    double mstd = 0.0;
    double atm_error = 0.0;  ///< NaN when the group has no ATM point
    std::size_t atm_n = 0;
    bool empty = true;
};

struct MetricOptions {
    std::vector<std::string> grouping;  ///< subset of {"T", "rho", "rho_X", "rho_Y", "s0Y"}
    double s0x = 100.0;                 ///< ATM reference for the ATM error
    bool mstd_signed = true;            ///< std of signed errors (else of absolute errors)
};

struct ReportEntry {
    std::map<std::string, double> key;  ///< grouping field -> value
    std::string convention;
    std::string variant;                ///< "included" or "a_star_in_range"
    Metrics metrics;
    std::size_t total = 0;              ///< rows in the group before exclusions
    std::map<std::string, std::size_t> excluded;
};

struct ErrorReport {
    MetricOptions options;
    std::vector<ReportEntry> entries;
};

/// Metrics per (group, convention, variant). The "a_star_in_range" variant
/// keeps only points whose a* (read from the "a-star" rows) lies in [-1, 2].
/// Empty groups are kept with Metrics::empty set.
ErrorReport compute_metrics(const std::vector<ResultRow>& rows, const MetricOptions& options = {});

void write_report_json(std::ostream& os, const ErrorReport& report);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
/// Reads a results CSV written by write_results_csv. Throws InputError on a
/// malformed header or row.
std::vector<ResultRow> read_results_csv(std::istream& is);

enum class PlotKind { skew, implied_corr, ratio, difference, moneyness_error };

/// Throws InputError for unknown names.
PlotKind parse_plot_kind(const std::string& name);

/// Tidy CSV `group,series,x,y`. skew: smiles (x = strike). implied_corr, ratio,
/// difference: per parameter combo and convention against S0^Y.
/// moneyness_error: mean |error| per (T, convention) against S0^Y.
/// Excluded rows are skipped; no input gives a header-only CSV.
void emit_plot_data(std::ostream& os, PlotKind kind, const std::vector<ResultRow>& rows,
                    const std::vector<Smile>& smiles = {});

}  // namespace strikeconv
