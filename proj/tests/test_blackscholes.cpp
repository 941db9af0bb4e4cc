#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "strikeconv/blackscholes.hpp"
#include "strikeconv/errors.hpp"
#include "strikeconv/normal.hpp"

using namespace strikeconv;

namespace {

const double kLn100 = std::log(100.0);

// Plain bisection on bs_price, used as an oracle for the Newton solver.
double bisect_vol(double price, double tau, double x, double k) {
    double lo = 1e-8, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (bs_price({0.0, tau, x, k, mid}) < price) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(NormalCdf, TailValues) {
    // Reference values to 17 digits (mpmath, 40 digits).
    EXPECT_NEAR(norm_cdf(0.1), 0.53982783727702899, 1e-16);
    EXPECT_NEAR(norm_cdf(-1.0), 0.15865525393145705, 1e-16);
    EXPECT_NEAR(norm_cdf(-8.0) / 6.2209605742717841e-16, 1.0, 1e-13);
    EXPECT_NEAR(norm_cdf(-30.0) / 4.906713927148187e-198, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(norm_cdf(0.0), 0.5);
}

TEST(BsPrice, AtmMatchesHighPrecisionValue) {
    // 100 (2 N(0.1) - 1), evaluated with 40-digit arithmetic.
    const double p = bs_price({0.0, 1.0, kLn100, kLn100, 0.2});
    EXPECT_NEAR(p, 7.965567455405796, 1e-12);
}

TEST(BsPrice, ZeroVolAtmIsWorthless) {
    EXPECT_EQ(bs_price({0.0, 1.0, kLn100, kLn100, 0.0}), 0.0);
    EXPECT_NEAR(bs_price({0.0, 1.0, kLn100, kLn100, 1e-12}), 0.0, 1e-9);
}

TEST(BsPrice, ZeroStrikeIsSpot) {
    const double ninf = -std::numeric_limits<double>::infinity();
    for (double s : {0.0, 0.1, 1.0, 3.0}) {
        EXPECT_DOUBLE_EQ(bs_price({0.0, 1.0, kLn100, ninf, s}), 100.0);
    }
}

TEST(BsPrice, ExpiryGivesIntrinsic) {
    EXPECT_NEAR(bs_price({1.0, 1.0, std::log(110.0), kLn100, 0.3}), 10.0, 1e-12);
    EXPECT_EQ(bs_price({0.5, 0.5, std::log(90.0), kLn100, 0.3}), 0.0);
}

TEST(BsPrice, RejectsBadInput) {
    EXPECT_THROW(bs_price({0.0, 1.0, std::nan(""), kLn100, 0.2}), InputError);
    EXPECT_THROW(bs_price({0.0, 1.0, kLn100, kLn100, -0.1}), InputError);
    EXPECT_THROW(bs_price({1.0, 0.5, kLn100, kLn100, 0.2}), InputError);
    EXPECT_THROW(bs_price({0.0, std::numeric_limits<double>::infinity(), kLn100, kLn100, 0.2}), InputError);
}

TEST(BsPrice, IncreasingInVolAndInsideBounds) {
    // Monotonicity is checked on the time value, which keeps full precision
    // where the full price has rounded to the intrinsic value.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> m(-1.0, 1.0), tau(0.01, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double x = kLn100, k = kLn100 + m(rng), t = tau(rng);
        const double intrinsic = std::max(std::exp(x) - std::exp(k), 0.0);
        double prev = bs_time_value({0.0, t, x, k, 0.01});
        EXPECT_GE(prev, 0.0);
        for (double s = 0.02; s <= 3.0; s += 0.05) {
            const double tv = bs_time_value({0.0, t, x, k, s});
            if (prev > 1e-300) EXPECT_GT(tv, prev); else EXPECT_GE(tv, prev);
            const double p = bs_price({0.0, t, x, k, s});
            EXPECT_GE(p, intrinsic);
            EXPECT_LT(p, std::exp(x));
            prev = tv;
        }
    }
}

TEST(BsTimeValue, MatchesPriceMinusIntrinsic) {
    for (double k : {80.0, 100.0, 125.0}) {
        const VanillaSpec s{0.0, 0.5, kLn100, std::log(k), 0.25};
        EXPECT_NEAR(bs_time_value(s), bs_price(s) - std::max(100.0 - k, 0.0), 1e-12);
    }
}

TEST(BsVega, FiniteDifferenceOracle) {
    for (double k : {90.0, 100.0, 110.0}) {
        for (double s : {0.1, 0.3, 0.8}) {
            const VanillaSpec spec{0.0, 0.7, kLn100, std::log(k), s};
            VanillaSpec up = spec, dn = spec;
            up.sigma += 1e-6;
            dn.sigma -= 1e-6;
            const double fd = (bs_price(up) - bs_price(dn)) / 2e-6;
            EXPECT_NEAR(bs_vega(spec) / fd, 1.0, 1e-8);
        }
    }
    const double atm = bs_vega({0.0, 0.7, kLn100, kLn100, 0.3});
    EXPECT_NEAR(atm, 100.0 * norm_pdf(0.3 * std::sqrt(0.7) / 2) * std::sqrt(0.7), 1e-12);
}

TEST(BsVega, LimitCases) {
    EXPECT_EQ(bs_vega({1.0, 1.0, kLn100, kLn100, 0.2}), 0.0);
    EXPECT_LT(bs_vega({0.0, 0.01, std::log(300.0), kLn100, 0.1}), 1e-100);
}

TEST(ImpliedVol, RoundTripGrid) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> vol(0.01, 3.0), m(-1.0, 1.0), tau(0.01, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 3000; ++i) {
        const double s = vol(rng), t = tau(rng), k = kLn100 + m(rng);
        const double p = bs_price({0.0, t, kLn100, k, s});
        const double intrinsic = std::max(100.0 - std::exp(k), 0.0);
        // Skip quotes whose time value is lost to round-off of the full price.
        if (p - intrinsic < 1e-9 * 100.0) continue;
        worst = std::max(worst, std::abs(implied_vol(p, 0.0, t, kLn100, k) - s));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(ImpliedVol, RoundTripFromTimeValue) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> vol(0.01, 3.0), m(-1.0, 1.0), tau(0.01, 2.0);
    for (int i = 0; i < 2000; ++i) {
        const double s = vol(rng), t = tau(rng), k = kLn100 + m(rng);
        const double tv = bs_time_value({0.0, t, kLn100, k, s});
        if (tv < 1e-250) continue;
        EXPECT_NEAR(implied_vol_from_time_value(tv, 0.0, t, kLn100, k), s, 1e-8);
    }
}

TEST(ImpliedVol, SimpleRoundTrip) {
    const double p = bs_price({0.0, 0.5, kLn100, std::log(105.0), 0.15});
    EXPECT_NEAR(implied_vol(p, 0.0, 0.5, kLn100, std::log(105.0)), 0.15, 1e-8);
    const double v = implied_vol(p, 0.0, 0.5, kLn100, std::log(105.0));
    EXPECT_LE(std::abs(bs_price({0.0, 0.5, kLn100, std::log(105.0), v}) - p), 1e-12 * 100.0);
}

TEST(ImpliedVol, DeepOtmShortDatedHighVol) {
    const double k = kLn100 + 0.5;
    const double p = bs_price({0.0, 0.05, kLn100, k, 1.3});
    const double oracle = bisect_vol(p, 0.05, kLn100, k);
    EXPECT_NEAR(oracle, 1.3, 1e-10);
    EXPECT_NEAR(implied_vol(p, 0.0, 0.05, kLn100, k), 1.3, 1e-6);
    EXPECT_NEAR(implied_vol(p, 0.0, 0.05, kLn100, k), oracle, 1e-9);
}

TEST(ImpliedVol, VolAboveInitialBracket) {
    const double p = bs_price({0.0, 0.1, kLn100, kLn100 + 0.3, 7.0});
    EXPECT_NEAR(implied_vol(p, 0.0, 0.1, kLn100, kLn100 + 0.3), 7.0, 1e-8);
}

TEST(ImpliedVol, ArbitrageBoundsAreDomainErrors) {
    const double k = std::log(90.0);
    EXPECT_THROW(implied_vol(10.0, 0.0, 1.0, kLn100, k), DomainError);
    EXPECT_THROW(implied_vol(5.0, 0.0, 1.0, kLn100, k), DomainError);
    EXPECT_THROW(implied_vol(std::exp(kLn100), 0.0, 1.0, kLn100, k), DomainError);
    EXPECT_THROW(implied_vol(1.0, 1.0, 1.0, kLn100, kLn100), DomainError);
    EXPECT_THROW(implied_vol(std::nan(""), 0.0, 1.0, kLn100, k), InputError);
}
