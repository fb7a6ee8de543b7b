#include "oracle.hpp"

#include <inhomo/counting.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace inhomo;

namespace {

double phi_oracle(std::int64_t Q, double delta, double lo, double hi) {
    const double thr = delta / double(Q * Q);
    std::vector<oracle::Span> all;
    const std::int64_t B0 = 2 * Q + 1;
    for (std::int64_t a2 = -Q; a2 <= Q; ++a2)
        for (std::int64_t a1 = -Q; a1 <= Q; ++a1)
            for (std::int64_t a0 = -B0; a0 <= B0; ++a0) {
                if (!a0 && !a1 && !a2) continue;
                auto s = oracle::sublevel({double(a0), double(a1), double(a2)}, lo, hi, thr);
                all.insert(all.end(), s.begin(), s.end());
            }
    return oracle::measure(oracle::unite(all));
}

std::uint64_t count_oracle(std::int64_t H, double delta, double v, bool cubic) {
    const double thr = std::pow(double(H), -v), cap = std::pow(double(H), delta);
    std::uint64_t n = 0;
    for (std::int64_t a2 = -H; a2 <= H; ++a2)
        for (std::int64_t a1 = -H; a1 <= H; ++a1)
            for (std::int64_t a0 = -H; a0 <= H; ++a0) {
                if (!a0 && !a1 && !a2) continue;
                oracle::Poly p{double(a0), double(a1), double(a2)};
                if (cubic) p.push_back(1);
                const auto A = oracle::sublevel(p, 0, 1, thr);
                const auto B = oracle::sublevel(oracle::deriv(p), 0, 1, cap);
                n += oracle::meet(A, B);
            }
    return n;
}

} // namespace

TEST(PhiMeasure, HeightOneMatchesUnionOracle) {
    const auto c = curves::veronese(2);
    const auto s = phi_measure(c, 1, 1.0, {0, 1});
    EXPECT_NEAR(s.measure(), phi_oracle(1, 1.0, 0, 1), 1e-10);
    EXPECT_LE(s.measure(), 1.0);
}

TEST(PhiMeasure, HeightFourOnSubinterval) {
    const auto c = curves::veronese(2);
    EXPECT_NEAR(phi_measure(c, 4, 0.5, {0.3, 0.5}).measure(), phi_oracle(4, 0.5, 0.3, 0.5), 1e-10);
}

TEST(PhiMeasure, ShrinksWithDelta) {
    const auto c = curves::veronese(2);
    EXPECT_LT(phi_measure(c, 4, 1e-6, {0, 1}).measure(), 1e-2);
    double prev = 2;
    for (double d : {1.0, 0.1, 0.01, 0.001}) {
        const double m = phi_measure(c, 8, d, {0, 1}).measure();
        EXPECT_LE(m, prev);
        prev = m;
    }
}

TEST(PhiMeasure, SmallMeasureAtQ64) {
    EXPECT_LT(phi_measure(curves::veronese(2), 64, 1e-2, {0, 1}).measure(), 0.5);
}

TEST(PhiMeasure, PreconditionsAndContainment) {
    const auto c = curves::veronese(2);
    EXPECT_THROW(phi_measure(c, 4, 0, {0, 1}), domain_error);
    EXPECT_THROW(phi_measure(c, 4, 0.5, {0.5, 1.5}), domain_error);
    const auto s = phi_measure(c, 8, 0.01, {0, 1});
    for (const auto& iv : s) {
        const double m = 0.5 * (iv.lo + iv.hi);
        EXPECT_TRUE(phi_contains(c, 8, 0.01, m));
    }
}

TEST(CountN, HeightTwoMatchesExhaustiveOracle) {
    const auto r = count_N(curves::veronese(2), InhomFunction::zero(), 2, 0, 3);
    const auto want = count_oracle(2, 0, 3, false);
    EXPECT_LE(r.N_lower, want);
    EXPECT_GE(r.N_upper, want);
}

TEST(CountN, CubicShiftMatchesOracle) {
    const auto r = count_N(curves::veronese(2), InhomFunction::power(3), 6, 0.5, 3);
    const auto want = count_oracle(6, 0.5, 3, true);
    EXPECT_LE(r.N_lower, want);
    EXPECT_GE(r.N_upper, want);
}

TEST(CountN, MonotoneInDelta) {
    const auto c = curves::veronese(2);
    std::uint64_t prev = 0;
    for (double d : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto r = count_N(c, InhomFunction::zero(), 16, d, 3);
        EXPECT_GE(r.N_lower, prev);
        prev = r.N_upper;
    }
}

TEST(CountN, ShellCountsOnlyTopHeight) {
    const auto c = curves::veronese(2);
    const auto full = count_N(c, InhomFunction::zero(), 8, 1, 3);
    const auto shell = count_N(c, InhomFunction::zero(), 8, 1, 3, 1, true);
    EXPECT_TRUE(shell.shell);
    EXPECT_EQ(shell.pairs, (17u * 17u) - (15u * 15u));
    EXPECT_LT(shell.N_upper, full.N_upper);
}

TEST(CountN, Preconditions) {
    const auto c = curves::veronese(2);
    EXPECT_THROW(count_N(c, InhomFunction::zero(), 1, 0, 3), domain_error);
    EXPECT_THROW(count_N(c, InhomFunction::zero(), 4, 1.5, 3), domain_error);
    EXPECT_THROW(count_N(curves::veronese(3), InhomFunction::zero(), 4, 0, 3), domain_error);
}

TEST(Pyartly, LinearAndQuadratic) {
    const auto lin = pyartly_check(Smooth::polynomial({0, 1.0L}), 0.1, 1, 0.5, {0, 1});
    EXPECT_NEAR(lin.measure, 0.1, 1e-12);
    EXPECT_NEAR(lin.c, 0.5, 1e-12);
    const auto q = pyartly_check(Smooth::polynomial({0, 0, 1.0L}), 0.01, 2, 1, {-1, 1});
    EXPECT_NEAR(q.measure, 0.2, 1e-12);
    EXPECT_NEAR(q.bound, 0.1, 1e-12);
    EXPECT_NEAR(q.c, 2, 1e-10);
    EXPECT_THROW(pyartly_check(Smooth::polynomial({0, 0, 1.0L}), 0.01, 2, 3, {-1, 1}), domain_error);
}

TEST(Pyartly, RandomQuadraticsHaveBoundedConstant) {
    double worst = 0;
    for (int a = 1; a <= 6; ++a)
        for (int b = -6; b <= 6; ++b)
            for (int c0 = -3; c0 <= 3; ++c0) {
                const auto r = pyartly_check(Smooth::polynomial({(long double)c0, (long double)b, (long double)a}),
                                             0.05, 2, 2 * a - 1e-9, {0, 1});
                worst = std::max(worst, r.c);
            }
    // p'' = 2a: {|p| < nu} is widest when min p = -nu, width 2 sqrt(2 nu / a) = 4 sqrt(nu / 2a)
    EXPECT_LE(worst, 4 + 1e-6);
    EXPECT_GT(worst, 0.0);
}

TEST(Dichotomy, CubicShiftHasPositiveConstant) {
    const auto r = dichotomy_check(curves::veronese(2), InhomFunction::power(3), {16, 32}, 0.05);
    EXPECT_GT(r.C1_empirical, 0.0);
    EXPECT_EQ(r.violations, 0u);
}

TEST(Triangle, DiagonalPlaneAttainsBound) {
    const auto r = min_triangle_area(1, 1, 1, 0, 2);
    EXPECT_NEAR(r.area, std::sqrt(3.0) / 2, 1e-12);
    EXPECT_NEAR(r.bound, std::sqrt(3.0) / 2, 1e-12);
    EXPECT_EQ(r.multiple, 1);
}

TEST(Triangle, CoordinatePlane) {
    const auto r = min_triangle_area(0, 0, 1, 0, 1);
    EXPECT_NEAR(r.area, 0.5, 1e-12);
    EXPECT_TRUE(r.respects_bound);
}

TEST(Triangle, SkewPlane) {
    const auto r = min_triangle_area(2, 3, 6, 1, 6);
    EXPECT_GE(r.area, 3.5 - 1e-12);
    for (const auto& p : r.witness) EXPECT_EQ(2 * p[0] + 3 * p[1] + 6 * p[2], 1);
    EXPECT_THROW(min_triangle_area(2, 4, 6, 0, 3), domain_error);
}

TEST(Triangle, ExhaustiveSmallPlanes) {
    int checked = 0;
    for (int A = -4; A <= 4; ++A)
        for (int B = -4; B <= 4; ++B)
            for (int C = 0; C <= 4; ++C) {
                if (std::gcd(std::gcd(std::abs(A), std::abs(B)), C) != 1) continue;
                for (int D = -2; D <= 2; ++D) {
                    if (plane_points(A, B, C, D, 4).size() < 3) continue;
                    const auto r = min_triangle_area(A, B, C, D, 4);
                    if (r.multiple == 0) continue;  // collinear points only
                    EXPECT_TRUE(r.respects_bound) << A << ' ' << B << ' ' << C << ' ' << D;
                    ++checked;
                }
            }
    EXPECT_GT(checked, 100);
}
