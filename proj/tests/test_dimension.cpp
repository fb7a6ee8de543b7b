#include "oracle.hpp"

#include <inhomo/dimension.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace inhomo;

namespace {

const InhomFunction& zero() {
    static const InhomFunction z = InhomFunction::zero();
    return z;
}

const InhomFunction& cubic() {
    static const InhomFunction c = InhomFunction::power(3);
    return c;
}

const CurveSystem& parabola() {
    static const CurveSystem c = curves::parabola();
    return c;
}

/// Total length and piece count of the solution sets of all forms with H_lo <= H(F) <= H_hi.
std::pair<double, std::size_t> stage_oracle(std::int64_t H_lo, std::int64_t H_hi, double v, bool cubic) {
    double total = 0;
    std::size_t pieces = 0;
    for (std::int64_t a2 = -H_hi; a2 <= H_hi; ++a2)
        for (std::int64_t a1 = -H_hi; a1 <= H_hi; ++a1) {
            const std::int64_t H = std::max(std::llabs(a1), std::llabs(a2));
            if (H < H_lo) continue;
            const double thr = std::pow(double(H), -v);
            const std::int64_t B0 = 2 * H + 2;
            for (std::int64_t a0 = -B0; a0 <= B0; ++a0) {
                oracle::Poly p{double(a0), double(a1), double(a2)};
                if (cubic) p.push_back(1);
                const auto s = oracle::sublevel(p, 0, 1, thr);
                total += oracle::measure(s);
                pieces += s.size();
            }
        }
    return {total, pieces};
}

} // namespace

TEST(Targets, DimensionFormula) {
    EXPECT_DOUBLE_EQ(dimension_target(3), 0.75);
    EXPECT_DOUBLE_EQ(dimension_target(5), 0.5);
    EXPECT_NEAR(dimension_target(2.5), 6.0 / 7, 1e-15);
    EXPECT_DOUBLE_EQ(lower_bound_target(2, 3), dimension_target(3));
}

TEST(SolutionIntervals, LinearFormCoversInterval) {
    const auto s = solution_intervals(IntegerForm{0, 1, 0}, parabola(), InhomFunction::zero(), 3);
    EXPECT_NEAR(s.measure(), 1.0, 1e-12);
}

TEST(SolutionIntervals, SmallQuadraticCoversInterval) {
    const auto s = solution_intervals(IntegerForm{0, -1, 1}, parabola(), InhomFunction::zero(), 3);
    EXPECT_NEAR(s.measure(), 1.0, 1e-12);
}

TEST(SolutionIntervals, ScaledFormHasTwoNarrowPieces) {
    const auto s = solution_intervals(IntegerForm{0, -4, 4}, parabola(), InhomFunction::zero(), 3);
    ASSERT_EQ(s.size(), 2u);
    const auto want = oracle::sublevel({0, -4, 4}, 0, 1, std::pow(4.0, -3));
    ASSERT_EQ(want.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(s.intervals()[i].lo, want[i].first, 1e-13);
        EXPECT_NEAR(s.intervals()[i].hi, want[i].second, 1e-13);
    }
    // |G'(root)| = 4: one-sided widths H^{-v} / 4 = 1/256 at the clipped endpoints 0 and 1
    EXPECT_NEAR(s.intervals()[0].length(), 1.0 / 256, 5e-5);
    EXPECT_NEAR(s.intervals()[1].length(), 1.0 / 256, 5e-5);
}

TEST(SolutionIntervals, InteriorRootWidthIsFirstOrder) {
    // 8x - 3: root 3/8, width 2 H^{-v} / |G'| = 2 * 8^{-3} / 8
    const auto s = solution_intervals(IntegerForm{-3, 8, 0}, parabola(), InhomFunction::zero(), 3);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_NEAR(s.measure(), 2 * std::pow(8.0, -3) / 8, 1e-15);
}

TEST(Stage, MatchesExhaustiveOracle) {
    for (bool cubic : {false, true}) {
        const auto lam = cubic ? InhomFunction::power(3) : InhomFunction::zero();
        const auto st = build_stage(parabola(), lam, 3, 4, {});
        const auto [total, pieces] = stage_oracle(8, 15, 3, cubic);
        EXPECT_NEAR(st.total_length, total, 1e-12 + 1e-9 * total) << "cubic " << cubic;
        EXPECT_EQ(st.interval_count, pieces) << "cubic " << cubic;
        EXPECT_LE(st.uni.measure(), 1.0);
    }
}

TEST(Stage, MeasureNonIncreasingInV) {
    double prev = 2;
    for (double v : {2.5, 3.0, 4.0, 6.0}) {
        const auto st = build_stage(parabola(), zero(), v, 5, {});
        EXPECT_LE(st.uni.measure(), prev + 1e-15);
        EXPECT_LE(st.uni.measure(), 1.0);
        prev = st.uni.measure();
    }
}

TEST(Stage, WorkerCountDoesNotChangeOutput) {
    StageOptions a, b;
    b.workers = 3;
    const auto s1 = build_stage(parabola(), cubic(), 3, 5, a);
    const auto s3 = build_stage(parabola(), cubic(), 3, 5, b);
    ASSERT_EQ(s1.forms.size(), s3.forms.size());
    EXPECT_EQ(s1.total_length, s3.total_length);
    for (std::size_t i = 0; i < s1.forms.size(); ++i) {
        EXPECT_EQ(s1.forms[i].a0, s3.forms[i].a0);
        EXPECT_EQ(s1.forms[i].a1, s3.forms[i].a1);
        EXPECT_EQ(s1.forms[i].a2, s3.forms[i].a2);
        ASSERT_EQ(s1.forms[i].intervals.size(), s3.forms[i].intervals.size());
        for (std::size_t j = 0; j < s1.forms[i].intervals.size(); ++j)
            EXPECT_EQ(s1.forms[i].intervals[j].lo, s3.forms[i].intervals[j].lo);
    }
}

TEST(Stage, BudgetIsEnforced) {
    StageOptions o;
    o.budget = 1000;
    EXPECT_THROW(build_stage(parabola(), zero(), 3, 8, o), budget_error);
}

TEST(Ladder, GeometricWithRatioK) {
    const auto L = delta_ladder(3.5, 0.1);
    const double k = 4.5 / 3;
    ASSERT_FALSE(L.deltas.empty());
    EXPECT_DOUBLE_EQ(L.deltas[0], 0.1);
    for (std::size_t i = 1; i < L.deltas.size(); ++i) EXPECT_NEAR(L.deltas[i], L.deltas[i - 1] * k, 1e-15);
    EXPECT_LE(L.deltas.back(), 1.0);
    EXPECT_GT(L.next, 1.0);
    EXPECT_NEAR(L.next, L.deltas.back() * k, 1e-15);
    EXPECT_THROW(delta_ladder(2, 0.1), domain_error);
    EXPECT_THROW(delta_ladder(3, 0), domain_error);
}

TEST(Classify, TransversalFormIsA1) {
    SolutionStage st;
    st.curve = &parabola();
    const auto lam = InhomFunction::zero();
    st.lambda = &lam;
    st.v = 3;
    st.forms.push_back({0, 40, 0, 40, solution_intervals(IntegerForm{0, 40, 0}, parabola(), lam, 3).intervals()});
    const auto recs = classify(st, 0.1, 0.05, {});
    ASSERT_EQ(recs.size(), 1u);
    for (const auto& p : recs[0].pieces) EXPECT_EQ(p.cls, FormClass::A1);
}

TEST(Classify, CriticalPointIsA3) {
    // 64 x^2 - 64 x + 16 = 16 (2x - 1)^2 touches zero at x = 1/2 with G' = 0
    SolutionStage st;
    st.curve = &parabola();
    const auto lam = InhomFunction::zero();
    st.lambda = &lam;
    st.v = 3;
    const IntegerForm F{16, -64, 64};
    st.forms.push_back({16, -64, 64, 64, solution_intervals(F, parabola(), lam, 3).intervals()});
    const auto recs = classify(st, 0.1, 0.05, {});
    bool a3_at_half = false;
    for (const auto& p : recs[0].pieces)
        if (p.cls == FormClass::A3 && p.iv.lo <= 0.5 && p.iv.hi >= 0.5) a3_at_half = true;
    EXPECT_TRUE(a3_at_half);
}

TEST(Classify, PartitionHasNoSliver) {
    const auto st = build_stage(parabola(), cubic(), 3, 6, {});
    const auto recs = classify(st, 0.1, 0.05, {});
    const auto sum = summarize(recs, 3, 0.1, 0.05);
    EXPECT_LT(sum.max_sliver, 1e-10);
    EXPECT_NEAR(sum.measure[0] + sum.measure[1] + sum.measure[2], st.total_length, 1e-10);
    double strata = 0;
    for (double m : sum.stratum_measure) strata += m;
    EXPECT_NEAR(strata, sum.measure[1], 1e-12);
    EXPECT_GT(sum.piece_count[0], 0u);
    EXPECT_THROW(classify(st, 0.1, 0.4, {}), domain_error);
}

TEST(Classify, WorkerCountDoesNotChangeOutput) {
    const auto st = build_stage(parabola(), zero(), 3, 5, {});
    ClassifyOptions o3;
    o3.workers = 3;
    const auto a = summarize(classify(st, 0.1, 0.05, {}), 3, 0.1, 0.05);
    const auto b = summarize(classify(st, 0.1, 0.05, o3), 3, 0.1, 0.05);
    EXPECT_EQ(a.piece_count, b.piece_count);
    EXPECT_EQ(a.measure, b.measure);
}

TEST(CellPartitionTest, ThresholdArithmetic) {
    // threshold 2^{6 (1/2 - 0.05)} = 2^{2.7} ~ 6.5: six segments stay class I, seven make class II
    std::vector<A3Segment> segs;
    for (int i = 0; i < 7; ++i) segs.push_back({{i, 1, 1}, {0.0001, 0.0002}});
    auto six = std::vector<A3Segment>(segs.begin(), segs.begin() + 6);
    const auto P6 = class_II_partition(six, {0, 1}, 6, 0.05, 1.0);
    EXPECT_NEAR(P6.threshold, std::exp2(2.7), 1e-12);
    EXPECT_TRUE(P6.class_II.empty());
    const auto P7 = class_II_partition(segs, {0, 1}, 6, 0.05, 1.0);
    ASSERT_EQ(P7.class_II.size(), 1u);
    EXPECT_EQ(P7.class_II[0], 0u);
    EXPECT_EQ(P7.incident[0].size(), 7u);
    EXPECT_EQ(P7.cells, static_cast<std::size_t>(std::ceil(std::exp2(1.05 * 6))));
    EXPECT_EQ(P7.class_I_count(), P7.cells - 1);
}

TEST(CellPartitionTest, EmptyCellIsClassI) {
    const auto P = class_II_partition({}, {0, 1}, 5, 0.05);
    EXPECT_TRUE(P.class_II.empty());
    EXPECT_EQ(P.cell(P.cells - 1).hi, 1.0);
}

TEST(CellPartitionTest, DuplicateTriplesAreMerged) {
    std::vector<A3Segment> segs;
    for (int i = 0; i < 10; ++i) segs.push_back({{1, 2, 3}, {0.5, 0.5}});
    const auto P = class_II_partition(segs, {0, 1}, 4, 0.05, 0.5);
    ASSERT_EQ(P.class_II.size(), 1u);
    EXPECT_EQ(P.incident[0].size(), 1u);
}

TEST(Incidence, ThreeNonCollinearGivePrimitivePlane) {
    const std::vector<Point3> tri{{0, 0, 2}, {2, 0, 0}, {0, 2, 0}};
    const auto d = incidence_analysis({0.4, 0.41}, tri, 6, 1.05, parabola());
    EXPECT_EQ(d.kind, IncidenceKind::plane);
    // x + y + z = 2 after gcd normalization
    EXPECT_EQ(std::abs(d.A), 1);
    EXPECT_EQ(std::abs(d.B), 1);
    EXPECT_EQ(std::abs(d.C), 1);
    EXPECT_EQ(std::abs(d.D), 2);
    EXPECT_TRUE(d.verified);
}

TEST(Incidence, CollinearGiveLine) {
    const std::vector<Point3> pts{{1, 1, 1}, {3, 2, 1}, {5, 3, 1}, {-1, 0, 1}};
    const auto d = incidence_analysis({0.4, 0.41}, pts, 6, 1.05, parabola());
    EXPECT_EQ(d.kind, IncidenceKind::line);
    const Point3 b = d.beta;
    EXPECT_EQ(std::abs(b[0]), 2);
    EXPECT_EQ(std::abs(b[1]), 1);
    EXPECT_EQ(b[2], 0);
}

TEST(Incidence, FourIndependentAreAViolation) {
    const std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto d = incidence_analysis({0.4, 0.41}, pts, 6, 1.05, parabola());
    EXPECT_EQ(d.kind, IncidenceKind::violation);
    EXPECT_EQ(d.witness.size(), 4u);
}

TEST(Incidence, SinglePointAndEmpty) {
    EXPECT_EQ(incidence_analysis({0, 0.1}, {{1, 2, 3}}, 6, 1.05, parabola()).kind, IncidenceKind::point);
    EXPECT_EQ(incidence_analysis({0, 0.1}, {}, 6, 1.05, parabola()).kind, IncidenceKind::empty);
}

TEST(Covers, NoViolationsAtSmallT) {
    for (int t : {5, 6}) {
        const auto rep = cover_analysis(parabola(), InhomFunction::zero(), 3, t, 0.05, 1.0);
        EXPECT_EQ(rep.violations, 0u);
        EXPECT_EQ(rep.cells.size(), rep.partition.class_II.size());
    }
}

TEST(SVolume, SlopeSignsAtTheEnds) {
    std::vector<WidthHistogram> hs;
    for (int t : {4, 5, 6}) hs.push_back(stage_width_histogram(parabola(), InhomFunction::zero(), 3, t, {}));
    const auto r = svolume_critical_exponent(hs, {0.0, 0.25, 0.5, 0.75, 1.0}, 3);
    EXPECT_GT(r.slope.front(), 0.0);
    EXPECT_LT(r.slope.back(), 0.0);
    EXPECT_GT(r.s_star, 0.0);
    EXPECT_LT(r.s_star, 1.0);
    EXPECT_THROW(svolume_critical_exponent({hs[0], hs[1]}, {0.5}, 3), invalid_input);
}

TEST(SVolume, HistogramTotalsMatchStage) {
    const auto st = build_stage(parabola(), cubic(), 3, 5, {});
    const auto h = stage_width_histogram(parabola(), InhomFunction::power(3), 3, 5, {});
    EXPECT_EQ(h.total, st.interval_count);
    EXPECT_NEAR(static_cast<double>(h.sum_power(1.0)), st.total_length, 1e-2 * st.total_length);
}

TEST(BoxCounts, FullIntervalHasSlopeOne) {
    const auto pts = box_counts(IntervalSet::single(0, 1), 0, 1, 3, 10);
    for (const auto& p : pts) EXPECT_EQ(p.count, std::uint64_t{1} << p.k);
    EXPECT_NEAR(fit_log_counts(pts).slope, 1.0, 1e-12);
}

TEST(BoxCounts, EmptySetFlagsZeroCounts) {
    const auto f = fit_log_counts(box_counts(IntervalSet{}, 0, 1, 3, 10));
    EXPECT_EQ(f.slope, 0.0);
    EXPECT_TRUE(f.zero_counts);
}

TEST(BoxCounts, CantorLikeSetHasLogTwoOverLogThree) {
    // middle-thirds construction to depth 12, counted at triadic-friendly dyadic scales
    std::vector<Interval> iv{{0, 1}};
    for (int d = 0; d < 12; ++d) {
        std::vector<Interval> next;
        for (const auto& x : iv) {
            const double w = (x.hi - x.lo) / 3;
            next.push_back({x.lo, x.lo + w});
            next.push_back({x.hi - w, x.hi});
        }
        iv = std::move(next);
    }
    const auto f = fit_log_counts(box_counts(IntervalSet(iv), 0, 1, 4, 14));
    EXPECT_NEAR(f.slope, std::log(2.0) / std::log(3.0), 0.05);
}

TEST(BoxCounts, CoverageAtLeast) {
    const std::vector<IntervalSet> sets{IntervalSet({{0, 0.5}}), IntervalSet({{0.25, 0.75}}), IntervalSet({{0.4, 1}})};
    EXPECT_NEAR(coverage_at_least(sets, 1).measure(), 1.0, 1e-15);
    EXPECT_NEAR(coverage_at_least(sets, 2).measure(), 0.25 + 0.1 + 0.25 - 0.1, 1e-15);
    EXPECT_NEAR(coverage_at_least(sets, 3).measure(), 0.1, 1e-15);
}

TEST(BoxPlanTest, RespectsWindowLimits) {
    BoxOptions o;
    const auto p = plan_box_windows(3, 1, o);
    EXPECT_GE(p.M, o.min_windows);
    EXPECT_LE(p.M, o.max_windows);
    EXPECT_LE(p.finest_stage, o.max_stage);
    o.window_exponent = 0;
    EXPECT_EQ(plan_box_windows(3, 1, o).M, 1u);
}

TEST(BoxDimension, SmallRunIsDeterministicAcrossWorkers) {
    BoxOptions o;
    o.k_min = 4;
    o.k_max = 8;
    o.max_stage = 6;
    o.min_windows = 100;
    o.max_windows = 400;
    const auto a = box_dimension(parabola(), InhomFunction::zero(), 3, o);
    o.workers = 2;
    const auto b = box_dimension(parabola(), InhomFunction::zero(), 3, o);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].count, b.points[i].count);
    EXPECT_EQ(a.fit.slope, b.fit.slope);
    EXPECT_GT(a.fit.slope, 0.0);
    EXPECT_LT(a.fit.slope, 1.0);
}
