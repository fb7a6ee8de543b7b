#include "oracle.hpp"

#include <inhomo/resonant.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace inhomo;

namespace {

/// alpha -> lowest witness height, over all planar forms of height <= Q with |a0| <= B0.
std::map<double, std::int64_t> resonant_oracle(std::int64_t Q, std::int64_t B0, bool cubic_shift) {
    std::vector<std::pair<double, std::int64_t>> pts;
    for (std::int64_t a2 = -Q; a2 <= Q; ++a2)
        for (std::int64_t a1 = -Q; a1 <= Q; ++a1)
            for (std::int64_t a0 = -B0; a0 <= B0; ++a0) {
                if (a0 == 0 && a1 == 0 && a2 == 0) continue;
                oracle::Poly p{double(a0), double(a1), double(a2)};
                if (cubic_shift) p.push_back(1.0);
                const std::int64_t h = std::max(std::llabs(a1), std::llabs(a2));
                for (double r : oracle::roots(p, 0, 1)) pts.push_back({r, h});
            }
    std::sort(pts.begin(), pts.end());
    std::map<double, std::int64_t> out;
    double last = -1;
    for (const auto& [x, h] : pts) {
        if (!out.empty() && x - last < 1e-9) {
            auto& best = std::prev(out.end())->second;
            best = std::min(best, h);
        } else {
            out[x] = h;
            last = x;
        }
    }
    return out;
}

void expect_same(const std::vector<ResonantPoint>& got, const std::map<double, std::int64_t>& want) {
    ASSERT_EQ(got.size(), want.size());
    auto it = want.begin();
    for (const auto& p : got) {
        EXPECT_NEAR(p.alpha, it->first, 1e-10);
        EXPECT_EQ(p.height, it->second) << "alpha " << p.alpha;
        ++it;
    }
}

} // namespace

TEST(IsolateRoots, FactorizableAndQuadraticFormula) {
    const auto c = curves::veronese(2);
    const auto z = InhomFunction::zero();
    auto r = isolate_roots(IntegerForm{0, -1, 1}, c, z, 1e-3);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0].lo, 0.0, 1e-12);
    EXPECT_NEAR(r[1].hi, 1.0, 1e-12);
    auto g = isolate_roots(IntegerForm{-1, 1, 1}, c, z, 1e-3);
    ASSERT_EQ(g.size(), 1u);
    const double golden = (std::sqrt(5.0) - 1) / 2;
    EXPECT_LE(g[0].lo, golden + 1e-13);
    EXPECT_GE(g[0].hi, golden - 1e-13);
    EXPECT_TRUE(g[0].certified);
}

TEST(IsolateRoots, TangentialRootAtBoundaryIsFlagged) {
    auto r = isolate_roots(IntegerForm{0, 0, 1}, curves::veronese(2), InhomFunction::power(3), 1e-3);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(0.5 * (r[0].lo + r[0].hi), 0.0, 1e-12);
    EXPECT_FALSE(r[0].certified);
}

TEST(EnumerateResonant, HeightOneMatchesQuadraticOracle) {
    const auto pts = enumerate_resonant(curves::veronese(2), InhomFunction::zero(), 1);
    expect_same(pts, resonant_oracle(1, 3, false));
    auto has = [&](double x) {
        for (const auto& p : pts)
            if (std::fabs(p.alpha - x) < 1e-12) return true;
        return false;
    };
    EXPECT_TRUE(has(0.0));
    EXPECT_TRUE(has(1.0));
    EXPECT_TRUE(has((std::sqrt(5.0) - 1) / 2));
    EXPECT_FALSE(has(0.5));  // needs a1 = 2
}

TEST(EnumerateResonant, CubicShiftMatchesCubicOracle) {
    const auto pts = enumerate_resonant(curves::veronese(2), InhomFunction::power(3), 1);
    expect_same(pts, resonant_oracle(1, 4, true));
}

TEST(EnumerateResonant, HeightTwoMatchesOracle) {
    const auto c = curves::veronese(2);
    expect_same(enumerate_resonant(c, InhomFunction::zero(), 2), resonant_oracle(2, a0_bound(c, InhomFunction::zero(), 2), false));
}

TEST(EnumerateResonant, WorkerCountDoesNotChangeOutput) {
    ResonantOptions one, three;
    three.workers = 3;
    const auto a = enumerate_resonant(curves::veronese(2), InhomFunction::power(3), 6, one);
    const auto b = enumerate_resonant(curves::veronese(2), InhomFunction::power(3), 6, three);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].alpha, b[i].alpha);
        EXPECT_EQ(a[i].height, b[i].height);
    }
}

TEST(EnumerateResonant, RationalPointHasHeightOne) {
    const auto pts = enumerate_resonant(curves::veronese(2), InhomFunction::zero(), 1);
    const auto n = nearest_resonant(pts, 1.0);
    EXPECT_EQ(n.alpha, 1.0);
    EXPECT_EQ(pts[n.index].height, 1);
}

TEST(NearestResonant, TieBreakAndDistance) {
    auto mk = [](double x) { return ResonantPoint{x, x, x, 1, IntegerForm{1, 1}, true}; };
    const std::vector<ResonantPoint> pts{mk(0), mk(1)};
    auto r = nearest_resonant(pts, 0.3);
    EXPECT_EQ(r.alpha, 0.0);
    EXPECT_DOUBLE_EQ(r.distance, 0.3);
    EXPECT_EQ(nearest_resonant(pts, 0.5).alpha, 0.0);
    EXPECT_THROW(nearest_resonant({}, 0.5), domain_error);
}

TEST(NearestResonant, HeightOneListNearGoldenSection) {
    const auto pts = enumerate_resonant(curves::veronese(2), InhomFunction::zero(), 1);
    const double golden = (std::sqrt(5.0) - 1) / 2;
    const auto r = nearest_resonant(pts, 0.6);
    EXPECT_NEAR(r.alpha, golden, 1e-12);
    EXPECT_NEAR(r.distance, golden - 0.6, 1e-12);
}
