#include <cmath>
#include <complex>
#include <sstream>

#include <gtest/gtest.h>

#include "strikeconv/blackscholes.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/heston.hpp"

using namespace strikeconv;

namespace {

const HestonParams kModel{1.5, 0.15, 0.5, 0.15};
const AssetSpec kCase1X{1.5, -0.4, 100.0};
const AssetSpec kCase1Y{1.0, -0.6, 100.0};
const AssetSpec kCase2Y{1.0, 0.4, 100.0};

double price(const AssetSpec& a, double strike, double t) {
    return heston_vanilla_price(effective_heston(kModel, a), a.rho_sv, a.s0, strike, t);
}

}  // namespace

TEST(EffectiveHeston, Scaling) {
    const auto same = effective_heston(kModel, {1.0, 0.0, 100.0});
    EXPECT_EQ(same.kappa, kModel.kappa);
    EXPECT_EQ(same.theta, kModel.theta);
    EXPECT_EQ(same.nu, kModel.nu);
    EXPECT_EQ(same.sigma0, kModel.sigma0);
    const auto e = effective_heston(kModel, kCase1X);
    EXPECT_NEAR(e.theta, 0.3375, 1e-15);
    EXPECT_NEAR(e.nu, 0.75, 1e-15);
    EXPECT_NEAR(e.sigma0, 0.225, 1e-15);
    EXPECT_EQ(e.kappa, 1.5);
}

TEST(HestonParams, FellerNotRequired) {
    EXPECT_NO_THROW((HestonParams{0.5, 0.04, 1.0, 0.2}.validate()));
    EXPECT_THROW((HestonParams{0.5, 0.04, 0.0, 0.2}.validate()), InputError);
}

TEST(HestonCharacteristic, NormalisationAndMartingale) {
    const auto e = effective_heston(kModel, kCase1X);
    for (double t : {0.05, 1.0, 5.0}) {
        EXPECT_NEAR(std::abs(heston_characteristic({0.0, 0.0}, t, e, -0.4) - 1.0), 0.0, 1e-14);
        // u = -i gives E[S_T / S_0] = 1.
        EXPECT_NEAR(std::abs(heston_characteristic({0.0, -1.0}, t, e, -0.4) - 1.0), 0.0, 1e-12);
    }
}

TEST(HestonPrice, IndependentReferenceValues) {
    // 40-digit integration of the Lewis representation with the textbook
    // characteristic function.
    EXPECT_NEAR(price(kCase1X, 100.0, 0.05), 2.1656524195670230, 1e-10);
    EXPECT_NEAR(price(kCase1X, 90.0, 0.05), 10.108501844692407, 1e-10);
    EXPECT_NEAR(price({1.0, 0.4, 100.0}, 115.0, 0.05), 0.0018933079591803802, 1e-12);
    EXPECT_NEAR(price({1.24, -0.61, 100.0}, 80.0, 1.0), 25.485435539846128, 1e-10);
    EXPECT_NEAR(price({1.0, 0.48, 100.0}, 120.0, 1.0), 5.6573771144333295, 1e-10);
}

TEST(HestonPrice, DegenerateModelIsBlackScholes) {
    const HestonParams flat{50.0, 0.04, 1e-4, 0.2};
    for (double k : {80.0, 100.0, 120.0}) {
        const double h = heston_vanilla_price(flat, -0.5, 100.0, k, 0.5);
        const double bs = bs_price({0.0, 0.5, std::log(100.0), std::log(k), 0.2});
        EXPECT_NEAR(h, bs, 1e-4);
    }
}

TEST(HestonPrice, ZeroStrikeLimit) {
    EXPECT_NEAR(price(kCase1X, 1e-3, 0.5), 100.0 - 1e-3, 1e-8);
}

TEST(HestonPrice, PutCallParity) {
    const auto e = effective_heston(kModel, kCase1Y);
    for (double k : {70.0, 100.0, 140.0}) {
        const double c = heston_vanilla_price(e, -0.6, 100.0, k, 0.25, OptionKind::call);
        const double p = heston_vanilla_price(e, -0.6, 100.0, k, 0.25, OptionKind::put);
        EXPECT_NEAR(c - p, 100.0 - k, 1e-9);
    }
}

TEST(HestonPrice, RejectsBadInput) {
    const auto e = effective_heston(kModel, kCase1X);
    EXPECT_THROW(heston_vanilla_price(e, -0.4, 100.0, 0.0, 0.05), InputError);
    EXPECT_THROW(heston_vanilla_price(e, -0.4, 100.0, 100.0, 0.0), InputError);
    EXPECT_THROW(heston_vanilla_price(e, 1.4, 100.0, 100.0, 0.05), InputError);
}

TEST(Smile, SkewSignsFollowSpotVolCorrelation) {
    const auto grid = default_log_strike_grid(100.0, 41);
    const Smile x = build_smile(kModel, kCase1X, 0.05, grid, "X");
    const Smile y2 = build_smile(kModel, kCase2Y, 0.05, grid, "Y");
    const double z = std::log(100.0);
    EXPECT_GT(x.vol_at(z - 0.02), x.vol_at(z + 0.02));
    EXPECT_LT(y2.vol_at(z - 0.02), y2.vol_at(z + 0.02));
    const auto obs = measure_atm_observables(kModel, kCase1X, kCase2Y, 0.05);
    EXPECT_LT(obs.atm_skew_x, 0.0);
    EXPECT_GT(obs.atm_skew_y, 0.0);
}

TEST(Smile, FlatForDegenerateModel) {
    const HestonParams flat{50.0, 0.04, 1e-4, 0.2};
    const Smile s = build_smile(flat, {1.0, 0.0, 100.0}, 0.5, default_log_strike_grid(100.0, 11));
    for (const auto& p : s.points()) EXPECT_NEAR(p.implied_vol, 0.2, 1e-4);
    const auto obs = measure_atm_observables(flat, {1.0, 0.0, 100.0}, {1.0, 0.0, 100.0}, 0.5);
    EXPECT_NEAR(obs.atm_skew_x, 0.0, 1e-3);
}

TEST(Smile, RepricesHestonPrices) {
    const auto grid = default_log_strike_grid(100.0, 21);
    const Smile s = build_smile(kModel, kCase1X, 0.25, grid, "X");
    for (const auto& p : s.points()) {
        const double k = std::exp(p.log_strike);
        const double bs = bs_price({0.0, 0.25, std::log(100.0), p.log_strike, p.implied_vol});
        EXPECT_NEAR(bs, price(kCase1X, k, 0.25), 1e-9);
    }
}

TEST(Smile, InterpolatesThroughNodesAndExtrapolatesFlat) {
    const auto grid = default_log_strike_grid(100.0, 41);
    const Smile s = build_smile(kModel, kCase1Y, 0.1, grid, "Y");
    for (const auto& p : s.points()) EXPECT_NEAR(s.vol_at(p.log_strike), p.implied_vol, 1e-14);
    EXPECT_EQ(s.vol_at(grid.front() - 1.0), s.points().front().implied_vol);
    EXPECT_EQ(s.vol_at(grid.back() + 1.0), s.points().back().implied_vol);
    const double mid = 0.5 * (grid[20] + grid[21]);
    EXPECT_NEAR(s.vol_at(mid), heston_implied_vol(kModel, kCase1Y, std::exp(mid), 0.1), 1e-5);
}

TEST(Smile, StrikeRangeIsEnforced) {
    EXPECT_THROW(build_smile(kModel, kCase1X, 0.05, {std::log(50.0), std::log(100.0)}), InputError);
}

TEST(Smile, IndependentOfJobs) {
    const auto grid = default_log_strike_grid(100.0, 41);
    const Smile a = build_smile(kModel, kCase1X, 0.5, grid, "X", 1);
    const Smile b = build_smile(kModel, kCase1X, 0.5, grid, "X", 4);
    std::ostringstream sa, sb;
    write_smile_csv(sa, a);
    write_smile_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "asset,T,log_strike,strike,implied_vol");
}

TEST(ShortTime, AtmLevelTendsToSpotVol) {
    const auto obs = measure_atm_observables(kModel, kCase1X, kCase1Y, 0.005);
    EXPECT_NEAR(obs.atm_level_x, 1.5 * 0.15, 0.01);
    EXPECT_NEAR(obs.atm_level_y, 1.0 * 0.15, 0.01);
}

TEST(ShortTime, AtmSkewTendsToLimit) {
    for (const auto& y : {kCase1Y, kCase2Y}) {
        const auto obs = measure_atm_observables(kModel, kCase1X, y, 0.005);
        const double lim_x = kCase1X.rho_sv * kModel.nu / (4.0 * kModel.sigma0);
        const double lim_y = y.rho_sv * kModel.nu / (4.0 * kModel.sigma0);
        EXPECT_NEAR(obs.atm_skew_x / lim_x, 1.0, 0.15);
        EXPECT_NEAR(obs.atm_skew_y / lim_y, 1.0, 0.15);
        EXPECT_NEAR((obs.atm_skew_y / obs.atm_skew_x) / (y.rho_sv / kCase1X.rho_sv), 1.0, 0.10);
    }
}
