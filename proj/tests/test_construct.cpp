#include <inhomo/construct.hpp>
#include <inhomo/ubiquity.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace inhomo;

namespace {

__int128 det3(const lattice::IVec& a, const lattice::IVec& b, const lattice::IVec& c) {
    auto m = [](std::int64_t x, std::int64_t y) { return static_cast<__int128>(x) * y; };
    return m(a[0], m(b[1], c[2]) - m(b[2], c[1])) - m(a[1], m(b[0], c[2]) - m(b[2], c[0])) +
           m(a[2], m(b[0], c[1]) - m(b[1], c[0]));
}

bool independent(const std::vector<lattice::IVec>& rows) {
    const std::size_t d = rows.front().size();
    if (rows.size() == 1) return std::any_of(rows[0].begin(), rows[0].end(), [](auto x) { return x != 0; });
    if (rows.size() == 2) {
        if (d == 2) return static_cast<__int128>(rows[0][0]) * rows[1][1] != static_cast<__int128>(rows[0][1]) * rows[1][0];
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                if (static_cast<__int128>(rows[0][i]) * rows[1][j] != static_cast<__int128>(rows[0][j]) * rows[1][i])
                    return true;
        return false;
    }
    return det3(rows[0], rows[1], rows[2]) != 0;
}

/// Successive minima of the body by exhaustive search of |a_i| <= R, a0 near -P.
std::vector<double> minima_oracle(const CurveSystem& c, double xi, double Q, std::int64_t R) {
    const int n = c.n();
    auto gauge = [&](const lattice::IVec& a) {
        double L = static_cast<double>(a[0]), h = 0;
        for (int i = 1; i <= n; ++i) {
            L += static_cast<double>(a[i]) * std::pow(xi, i);
            h = std::max(h, std::fabs(static_cast<double>(a[i])));
        }
        return std::max(std::fabs(L) * std::pow(Q, n), h / Q);
    };
    std::vector<std::pair<double, lattice::IVec>> all;
    lattice::IVec a(n + 1, -R);
    for (;;) {
        for (std::int64_t a0 = -R; a0 <= R; ++a0) {
            a[0] = a0;
            if (std::all_of(a.begin(), a.end(), [](auto x) { return x == 0; })) continue;
            all.push_back({gauge(a), a});
        }
        int i = 1;
        while (i <= n && a[i] == R) a[i++] = -R;
        if (i > n) break;
        ++a[i];
    }
    std::sort(all.begin(), all.end());
    std::vector<lattice::IVec> picked;
    std::vector<double> mins;
    for (const auto& [g, v] : all) {
        auto trial = picked;
        trial.push_back(v);
        if (independent(trial)) {
            picked = trial;
            mins.push_back(g);
            if (static_cast<int>(picked.size()) == n + 1) break;
        }
    }
    return mins;
}

} // namespace

TEST(ShortVectors, LineAtOneHalf) {
    const auto c = curves::veronese(1);
    const auto sv = independent_short_vectors({0.5, 2, &c});
    ASSERT_TRUE(sv.exact);
    const auto want = minima_oracle(c, 0.5, 2, 12);
    ASSERT_EQ(sv.minima.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(sv.minima[i], want[i], 1e-12);
    EXPECT_LE(sv.C2, 2.0);
    EXPECT_EQ(lattice::rank(sv.vectors), 2);
}

TEST(ShortVectors, ParabolaAtOneThird) {
    const auto c = curves::veronese(2);
    const auto sv = independent_short_vectors({1.0 / 3, 4, &c});
    const auto want = minima_oracle(c, 1.0 / 3, 4, 24);
    ASSERT_EQ(sv.minima.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(sv.minima[i], want[i], 1e-9);
    EXPECT_EQ(lattice::rank(sv.vectors), 3);
}

TEST(ShortVectors, HeightOneAlwaysSucceeds) {
    const auto c = curves::veronese(2);
    for (double xi : {0.0, 0.123, 0.5, 0.99}) {
        const auto sv = independent_short_vectors({xi, 1, &c});
        EXPECT_EQ(lattice::rank(sv.vectors), 3);
        EXPECT_TRUE(std::isfinite(sv.C2));
    }
}

TEST(ShortVectors, BasisReductionAboveExhaustiveRange) {
    const auto c = curves::veronese(2);
    ShortVectorOptions o;
    o.exhaustive_max_Q = 8;
    const auto sv = independent_short_vectors({0.3, 16, &c}, o);
    EXPECT_FALSE(sv.exact);
    EXPECT_EQ(lattice::rank(sv.vectors), 3);
    const auto ex = independent_short_vectors({0.3, 16, &c});
    EXPECT_GE(sv.C2, ex.C2 * (1 - 1e-12));
}

TEST(RoundingSystem, DependentVectorsAreRejected) {
    const auto c = curves::veronese(2);
    const std::vector<lattice::IVec> dep{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    EXPECT_THROW(solve_rounding_system(dep, 0.3, c, InhomFunction::zero(), 8), degenerate_vectors);
    EXPECT_THROW(solve_rounding_system({{1, 0, 0}}, 0.3, c, InhomFunction::zero(), 8), degenerate_vectors);
}

TEST(LocalizeRoot, LinearShift) {
    const auto c = curves::veronese(1);
    const double x0 = 0.5, eps = 1e-7;
    const auto lam = InhomFunction::constant(-x0 + eps);
    const auto k = ConstructionConstants::from(1, 1, 0.5, 1);
    const auto r = localize_root(IntegerForm{0, 1}, c, lam, x0, 16, k, false);
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.alpha, x0 - eps, 1e-14);
    EXPECT_LE(std::fabs(r.alpha - x0), r.radius);
}

TEST(LocalizeRoot, NearBoundaryIsAnError) {
    const auto c = curves::veronese(1);
    const auto k = ConstructionConstants::from(1, 1, 0.5, 1);
    EXPECT_THROW(localize_root(IntegerForm{0, 1}, c, InhomFunction::zero(), 1e-3, 16, k, false), domain_error);
}

TEST(LocalizeRoot, StrictModeRaisesWhenQIsTooSmall) {
    const auto c = curves::veronese(2);
    const auto k = ConstructionConstants::from(2, 2, 0.2, 30);
    EXPECT_THROW(localize_root(IntegerForm{0, -1, 1}, c, InhomFunction::zero(), 0.5, 8, k, true), q_too_small);
}

TEST(Constants, DerivedFromC2) {
    const auto k = ConstructionConstants::from(2, 2, 0.25, 3);
    EXPECT_DOUBLE_EQ(k.C3, 9);
    EXPECT_DOUBLE_EQ(k.C4, 1 + 2 * 9 * 3 * 2);
    EXPECT_DOUBLE_EQ(k.K2, 18);
    EXPECT_DOUBLE_EQ(k.K1, std::max({k.C5, k.C6, k.C7}));
}

TEST(NearbyResonant, ResonantXiGivesZeroDistance) {
    const auto c = curves::veronese(2);
    const auto tr = nearby_resonant(0.5, c, InhomFunction::zero(), 16);
    // 1/2 is the root of 2x - 1; with delta = 1e-2 it lies in Phi and is exceptional
    EXPECT_TRUE(tr.exceptional);
}

TEST(NearbyResonant, NearLowHeightPointIsExceptional) {
    const auto c = curves::veronese(2);
    const double xi = 0.5 + 1e-9;
    const double C1 = std::cbrt(0.01);
    ASSERT_TRUE(phi_contains(c, C1 * 16, 0.01, xi));
    EXPECT_TRUE(nearby_resonant(xi, c, InhomFunction::zero(), 16).exceptional);
}

TEST(NearbyResonant, TraceAtPointThree) {
    const auto c = curves::veronese(2);
    const auto tr = nearby_resonant(0.3, c, InhomFunction::zero(), 8);
    ASSERT_FALSE(tr.exceptional);
    EXPECT_TRUE(tr.eq10_ok);
    EXPECT_EQ(lattice::rank(tr.vectors.vectors), 3);
    ASSERT_TRUE(tr.rounding.form.has_value());
    EXPECT_TRUE(tr.eq12_value_ok);
    EXPECT_TRUE(tr.eq12_derivative_ok);
    EXPECT_TRUE(tr.eq12_height_ok);
    EXPECT_EQ(tr.success, tr.eq8_ok);
}

TEST(NearbyResonant, OneOverPiAgainstResonantEnumeration) {
    const auto c = curves::veronese(2);
    const auto z = InhomFunction::zero();
    const double Q = 64;
    const auto tr = nearby_resonant(1 / M_PI, c, z, Q);
    ASSERT_FALSE(tr.exceptional);
    ASSERT_TRUE(tr.success) << tr.failure;
    EXPECT_LE(static_cast<double>(tr.height), tr.k.K1 * Q);
    EXPECT_LE(tr.distance, tr.k.K2 * std::pow(Q, -3));
    // alpha must be a resonant point of height <= H(F)
    const auto centers = resonant_centers(c, z, tr.height, tr.loc.alpha - 1e-6, tr.loc.alpha + 1e-6, {});
    const bool found = std::any_of(centers.begin(), centers.end(),
                                   [&](double x) { return std::fabs(x - tr.loc.alpha) < 1e-12; });
    EXPECT_TRUE(found);
}

TEST(NearbyResonant, RandomBatchLocalizes) {
    const auto c = curves::veronese(2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    int attempted = 0, ok = 0;
    for (int i = 0; i < 100; ++i) {
        const auto tr = nearby_resonant(U(rng), c, InhomFunction::zero(), 64);
        if (tr.exceptional) continue;
        ++attempted;
        if (tr.loc.ok) {
            ++ok;
            EXPECT_LE(tr.distance, tr.loc.radius);
        }
    }
    EXPECT_GE(ok, attempted * 9 / 10);
}
