#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "strikeconv/convention.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/experiments.hpp"

using namespace strikeconv;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.maturities = {0.05};
    g.rho = {-0.7, 0.9};
    g.rho_x = {-0.72, 0.48};
    g.rho_y = {-0.61, 0.59};
    g.s0y = {90, 100, 110};
    g.mc.n_paths = 4000;
    g.mc.steps_per_year = 250;
    g.smile_points = 21;
    return g;
}

std::string csv_of(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_results_csv(os, rows);
    return os.str();
}

ResultRow row(double s0y, double error, double mc = 1.0) {
    ResultRow r;
    r.maturity = 0.05;
    r.rho = 0.5;
    r.rho_x = -0.4;
    r.rho_y = -0.6;
    r.s0y = s0y;
    r.convention = "atm";
    r.mc_price = mc;
    r.margrabe_price = mc + error;
    r.error = error;
    return r;
}

}  // namespace

TEST(Conventions, Tokens) {
    EXPECT_EQ(parse_convention("atm").name(), "atm");
    EXPECT_EQ(parse_convention("lookup").resolve(0.3), 1.0);
    EXPECT_EQ(parse_convention("a=0.25").resolve(7.0), 0.25);
    EXPECT_EQ(parse_convention("a-star").resolve(7.6), 7.6);
    EXPECT_EQ(parse_convention("a-star-bounded").resolve(7.6), 2.0);
    EXPECT_EQ(parse_convention("a-star-bounded").resolve(-3.7), -1.0);
    EXPECT_THROW(parse_convention("a=abc"), InputError);
    EXPECT_THROW(parse_convention("median"), InputError);
    EXPECT_EQ(default_conventions().size(), 4u);
}

TEST(GridCounts, CorrelationExclusions) {
    const auto c = count_grid(GridSpec{});
    EXPECT_EQ(c.triples, 250u);
    EXPECT_EQ(c.invalid_triples, 49u);
    EXPECT_EQ(c.points, 250u * 5u * 11u);
    EXPECT_EQ(c.invalid_points, 49u * 5u * 11u);
}

TEST(GridCounts, ExtremeCorrelationsLoseAboutHalf) {
    const GridSpec g;
    std::map<double, int> invalid;
    for (double r : g.rho)
        for (double rx : g.rho_x)
            for (double ry : g.rho_y)
                if (!validate_correlation({r, rx, ry}).valid) ++invalid[r];
    EXPECT_GE(invalid[-0.9], 9);
    EXPECT_LE(invalid[-0.9], 16);
    EXPECT_GE(invalid[0.9], 9);
    EXPECT_LE(invalid[0.9], 16);
    EXPECT_EQ(invalid[0.1], 0);
}

TEST(GridSpec, OptimalConventionLeavesBoundsOnTheGrid) {
    const GridSpec g;
    double lo = 0.0, hi = 0.0;
    for (double rx : g.rho_x)
        for (double ry : g.rho_y) {
            const auto obs = measure_atm_observables(g.heston, {g.lambda_x, rx, 100.0}, {g.lambda_y, ry, 100.0}, 0.05);
            try {
                const double a = a_star_observables(obs, 0.5);
                lo = std::min(lo, a);
                hi = std::max(hi, a);
            } catch (const DegenerateConventionError&) {
            }
        }
    EXPECT_TRUE(lo < -1.0 || hi > 2.0);
}

TEST(TestCase, AtmPricesCoincideAcrossConventions) {
    TestCaseOptions opt;
    opt.mc.n_paths = 4000;
    opt.mc.steps_per_year = 250;
    const auto res = run_test_case(1, opt);
    EXPECT_EQ(res.rows.size(), 21u * 3u);
    std::vector<double> atm;
    for (const auto& r : res.rows) {
        EXPECT_FALSE(r.excluded);
        if (r.s0y == 100.0) atm.push_back(r.margrabe_price);
    }
    ASSERT_EQ(atm.size(), 3u);
    EXPECT_EQ(atm[0], atm[1]);
    EXPECT_EQ(atm[1], atm[2]);
    EXPECT_NEAR(res.a_star_parametric, 0.0, 1e-12);
    EXPECT_EQ(res.smile_x.label(), "X");
}

TEST(Grid, DeterministicAcrossJobs) {
    GridSpec g = small_grid();
    g.mc.jobs = 1;
    const std::string a = csv_of(run_grid(g));
    g.mc.jobs = 3;
    const std::string b = csv_of(run_grid(g));
    EXPECT_EQ(a, b);
}

TEST(Grid, PointAccountingAndMetricSanity) {
    GridSpec g = small_grid();
    g.min_mc_price = 0.5;
    const auto rows = run_grid(g);
    const auto counts = count_grid(g);
    EXPECT_EQ(rows.size(), counts.points * g.conventions.size());
    std::size_t invalid = 0;
    for (const auto& r : rows)
        if (r.excluded && r.exclusion_reason == exclusion::invalid_correlation) ++invalid;
    EXPECT_EQ(invalid, counts.invalid_points * g.conventions.size());

    MetricOptions mo;
    mo.grouping = {"T", "rho"};
    const auto report = compute_metrics(rows, mo);
    for (const auto& e : report.entries) {
        std::size_t excluded = 0;
        for (const auto& [reason, n] : e.excluded) excluded += n;
        EXPECT_EQ(e.metrics.n + excluded, e.total);
        if (!e.metrics.empty) {
            EXPECT_GE(e.metrics.mae, 0.0);
            EXPECT_GE(e.metrics.max_ae, e.metrics.mae);
            EXPECT_GE(e.metrics.rmse, e.metrics.mae - 1e-15);
            EXPECT_GE(e.metrics.mstd, 0.0);
        }
    }
}

TEST(Grid, ConventionsCoincideAtTheMoney) {
    const auto rows = run_grid(small_grid());
    std::map<std::tuple<double, double, double>, std::vector<double>> atm;
    for (const auto& r : rows)
        if (!r.excluded && r.s0y == 100.0) atm[{r.rho, r.rho_x, r.rho_y}].push_back(r.margrabe_price);
    ASSERT_FALSE(atm.empty());
    for (const auto& [k, prices] : atm)
        for (double p : prices) EXPECT_NEAR(p, prices.front(), 1e-12);
}

TEST(Metrics, ZeroErrors) {
    const auto rep = compute_metrics({row(90, 0.0), row(100, 0.0), row(110, 0.0)});
    ASSERT_EQ(rep.entries.size(), 1u);
    const auto& m = rep.entries[0].metrics;
    EXPECT_EQ(m.n, 3u);
    EXPECT_EQ(m.mae, 0.0);
    EXPECT_EQ(m.mape, 0.0);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.max_ae, 0.0);
    EXPECT_EQ(m.mstd, 0.0);
    EXPECT_EQ(m.atm_error, 0.0);
}

TEST(Metrics, SinglePoint) {
    const auto rep = compute_metrics({row(104, 0.5)});
    const auto& m = rep.entries.at(0).metrics;
    EXPECT_DOUBLE_EQ(m.mae, 0.5);
    EXPECT_DOUBLE_EQ(m.rmse, 0.5);
    EXPECT_DOUBLE_EQ(m.max_ae, 0.5);
    EXPECT_DOUBLE_EQ(m.mstd, 0.0);
    EXPECT_TRUE(std::isnan(m.atm_error));
}

TEST(Metrics, HandComputedValues) {
    const auto rep = compute_metrics({row(90, 0.1, 2.0), row(100, -0.3, 3.0), row(110, 0.2, 4.0)});
    const auto& m = rep.entries.at(0).metrics;
    EXPECT_NEAR(m.mae, 0.2, 1e-15);
    EXPECT_NEAR(m.mape, (0.05 + 0.1 + 0.05) / 3.0, 1e-15);
    EXPECT_NEAR(m.rmse, std::sqrt((0.01 + 0.09 + 0.04) / 3.0), 1e-15);
    EXPECT_NEAR(m.max_ae, 0.3, 1e-15);
    EXPECT_NEAR(m.atm_error, 0.3, 1e-15);
    // Population std of signed errors {0.1, -0.3, 0.2}.
    EXPECT_NEAR(m.mstd, std::sqrt((0.01 + 0.09 + 0.04) / 3.0 - 0.0), 1e-12);
    MetricOptions abs_opt;
    abs_opt.mstd_signed = false;
    const double mean_abs = 0.2;
    const double var_abs = (0.01 + 0.09 + 0.04) / 3.0 - mean_abs * mean_abs;
    EXPECT_NEAR(compute_metrics({row(90, 0.1, 2.0), row(100, -0.3, 3.0), row(110, 0.2, 4.0)}, abs_opt)
                    .entries.at(0).metrics.mstd,
                std::sqrt(var_abs), 1e-12);
}

TEST(Metrics, EmptyGroupsAreMarked) {
    auto r = row(100, 0.1);
    r.excluded = true;
    r.exclusion_reason = exclusion::below_min_price;
    const auto rep = compute_metrics({r});
    ASSERT_EQ(rep.entries.size(), 1u);
    EXPECT_TRUE(rep.entries[0].metrics.empty);
    EXPECT_EQ(rep.entries[0].excluded.at(exclusion::below_min_price), 1u);
    EXPECT_THROW(compute_metrics({r}, MetricOptions{{"sigma"}, 100.0, true}), InputError);
}

TEST(Metrics, EmptyReportJson) {
    std::ostringstream os;
    write_report_json(os, compute_metrics({}));
    EXPECT_NE(os.str().find("\"empty\": true"), std::string::npos);
}

TEST(ResultsCsv, RoundTrip) {
    auto a = row(96, 0.0123456789, 1.5);
    a.implied_corr = std::nan("");
    auto b = row(100, -0.5, 2.5);
    b.excluded = true;
    b.exclusion_reason = exclusion::invalid_correlation;
    const std::string text = csv_of({a, b});
    std::istringstream is(text);
    const auto back = read_results_csv(is);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(csv_of(back), text);
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "T,rho,rho_X,rho_Y,s0Y,convention,a_value,kX,kY,IX,IY,margrabe_price,mc_price,mc_stderr,error,"
              "implied_corr,excluded,exclusion_reason");
}

TEST(ResultsCsv, MalformedInput) {
    std::istringstream bad_header("T,rho\n1,2\n");
    EXPECT_THROW(read_results_csv(bad_header), InputError);
    std::istringstream empty("");
    EXPECT_TRUE(read_results_csv(empty).empty());
}

TEST(PlotData, KindsAndEmptyInput) {
    EXPECT_THROW(parse_plot_kind("histogram"), InputError);
    for (const char* k : {"skew", "implied_corr", "ratio", "difference", "moneyness_error"}) {
        std::ostringstream os;
        emit_plot_data(os, parse_plot_kind(k), {});
        EXPECT_EQ(os.str(), "group,series,x,y\n");
    }
    std::ostringstream os;
    emit_plot_data(os, PlotKind::moneyness_error, {row(90, 0.1), row(110, -0.2)});
    EXPECT_NE(os.str().find("atm"), std::string::npos);
}
