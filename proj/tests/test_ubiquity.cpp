#include <inhomo/resonant.hpp>
#include <inhomo/ubiquity.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace inhomo;

TEST(BallUnion, SingleBall) {
    const auto s = union_intersect_measure({{0.5, 0.1}}, {0, 1});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_NEAR(s.intervals()[0].lo, 0.4, 1e-15);
    EXPECT_NEAR(s.intervals()[0].hi, 0.6, 1e-15);
    EXPECT_NEAR(s.measure(), 0.2, 1e-15);
}

TEST(BallUnion, OverlapAndClip) {
    EXPECT_NEAR(union_intersect_measure({{0, 0.3}, {0.5, 0.3}}, {0, 1}).measure(), 0.8, 1e-15);
    const auto s = union_intersect_measure({{0.2, 0.05}, {0.21, 0.05}}, {0.2, 0.3});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_NEAR(s.intervals()[0].hi, 0.26, 1e-15);
    EXPECT_NEAR(s.measure(), 0.06, 1e-15);
    EXPECT_THROW(union_intersect_measure({{0.2, -1}}, {0, 1}), domain_error);
}

TEST(BallUnion, SortedCenterSweepAgreesWithIntervalSet) {
    std::vector<double> centers{0.05, 0.1, 0.33, 0.34, 0.9};
    std::vector<Ball> balls;
    for (double c : centers) balls.push_back({c, 0.02});
    for (Interval J : {Interval{0, 1}, Interval{0.3, 0.5}, Interval{0.08, 0.12}})
        EXPECT_NEAR(detail::covered_measure(centers, 0.02, J), union_intersect_measure(balls, J).measure(), 1e-15);
}

TEST(ResonantCenters, AgreeWithEnumeration) {
    const auto c = curves::veronese(2);
    for (const auto& lam : {InhomFunction::zero(), InhomFunction::power(3)}) {
        const auto pts = enumerate_resonant(c, lam, 4);
        const auto centers = resonant_centers(c, lam, 4, 0, 1, {});
        // centers keep near-duplicate roots of proportional forms; the sets agree up to rounding
        auto near = [](double x, auto&& xs, auto&& get) {
            for (const auto& y : xs)
                if (std::fabs(get(y) - x) < 1e-12) return true;
            return false;
        };
        auto id = [](double y) { return y; };
        auto al = [](const ResonantPoint& p) { return p.alpha; };
        for (double x : centers) EXPECT_TRUE(near(x, pts, al)) << x;
        for (const auto& p : pts) EXPECT_TRUE(near(p.alpha, centers, id)) << p.alpha;
        EXPECT_GE(centers.size(), pts.size());
    }
}

TEST(Coverage, HugeKappaCoversEverything) {
    const auto c = curves::veronese(2);
    const auto rep = coverage_sweep(c, InhomFunction::zero(), {2, 3}, {{0, 1}, {0.2, 0.3}}, 1e6);
    EXPECT_DOUBLE_EQ(rep.min_ratio, 1.0);
    EXPECT_DOUBLE_EQ(rep.rho_step_ratio, 0.125);
    EXPECT_TRUE(rep.rho_regular);
}

TEST(Coverage, CalibrationHitsTarget) {
    const auto c = curves::veronese(2);
    const double kappa = calibrate_kappa(c, InhomFunction::zero(), 4, 0.5);
    const auto rep = coverage_sweep(c, InhomFunction::zero(), {4}, {{0, 1}}, kappa);
    EXPECT_NEAR(rep.records[0].ratio, 0.5, 1e-6);
    EXPECT_NEAR(rep.records[0].radius, kappa / 4096, 1e-18);
}

TEST(Coverage, RatiosStayPositiveWithFrozenKappa) {
    const auto c = curves::veronese(2);
    for (const auto& lam : {InhomFunction::zero(), InhomFunction::power(3)}) {
        const double kappa = calibrate_kappa(c, lam, 3, 0.5);
        const auto rep = coverage_sweep(c, lam, {4, 5, 6}, {{0, 1}, {0.3, 0.5}}, kappa);
        EXPECT_GE(rep.min_ratio, 0.1);
    }
}

TEST(Coverage, WorkerCountDoesNotChangeResult) {
    const auto c = curves::veronese(2);
    UbiquityOptions one, two;
    two.workers = 2;
    const auto a = coverage_sweep(c, InhomFunction::power(3), {5}, {{0, 1}}, 0.2, one);
    const auto b = coverage_sweep(c, InhomFunction::power(3), {5}, {{0, 1}}, 0.2, two);
    EXPECT_EQ(a.records[0].covered, b.records[0].covered);
}

TEST(Coverage, Preconditions) {
    const auto c = curves::veronese(2);
    EXPECT_THROW(coverage_sweep(c, InhomFunction::zero(), {}, {{0, 1}}, 1), domain_error);
    EXPECT_THROW(coverage_sweep(c, InhomFunction::zero(), {3}, {{0, 2}}, 1), domain_error);
    EXPECT_THROW(coverage_sweep(c, InhomFunction::zero(), {3}, {{0, 1}}, 0), domain_error);
    EXPECT_THROW(calibrate_kappa(c, InhomFunction::zero(), 3, 1.5), domain_error);
}

TEST(Divergence, ExponentArithmetic) {
    const auto psi = ApproxFunction::power(3);
    // summand exponent -s (v + 1) + n
    const auto boundary = divergence_diagnostic(psi, 0.75, 2, 1 << 20);
    EXPECT_EQ(boundary.verdict, Verdict::divergent);
    EXPECT_EQ(boundary.empirical, Verdict::divergent);
    EXPECT_DOUBLE_EQ(boundary.threshold, 0.75);
    EXPECT_EQ(divergence_diagnostic(psi, 0.8, 2, 1 << 20).verdict, Verdict::convergent);
    EXPECT_EQ(divergence_diagnostic(psi, 0.8, 2, 1 << 20).empirical, Verdict::convergent);
    EXPECT_EQ(divergence_diagnostic(psi, 0.7, 2, 1 << 20).empirical, Verdict::divergent);
}

TEST(Divergence, PartialSumsIncrease) {
    const auto r = divergence_diagnostic(ApproxFunction::power(4), 0.5, 2, 1 << 12);
    ASSERT_EQ(r.partial_sums.size(), r.checkpoints.size());
    for (std::size_t i = 1; i < r.partial_sums.size(); ++i) EXPECT_GT(r.partial_sums[i], r.partial_sums[i - 1]);
    EXPECT_THROW(divergence_diagnostic(ApproxFunction::power(4), 0, 2, 1 << 12), domain_error);
    EXPECT_THROW(divergence_diagnostic(ApproxFunction::power(4), 0.5, 2, 100), domain_error);
}

TEST(Divergence, ClosurePsiUsesEmpiricalVerdict) {
    auto psi = ApproxFunction::closure([](double q) { return std::pow(q, -3) / std::log(q + 2); });
    const auto r = divergence_diagnostic(psi, 0.5, 2, 1 << 16);
    EXPECT_FALSE(r.has_exact);
    EXPECT_EQ(r.verdict, r.empirical);
    EXPECT_EQ(r.verdict, Verdict::divergent);
}
