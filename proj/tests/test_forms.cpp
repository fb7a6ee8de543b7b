#include <inhomo/forms.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace inhomo;

TEST(Height, ExcludesConstantTerm) {
    EXPECT_EQ(height(IntegerForm{3, 2, -5}), 5);
    EXPECT_EQ(height(IntegerForm{1000000, 1, 0}), 1);
    EXPECT_EQ(height(IntegerForm{0, 0, 7}), 7);
}

TEST(IntegerFormTest, RejectsZeroAndShortVectors) {
    EXPECT_THROW((IntegerForm{0, 0, 0}), invalid_input);
    EXPECT_THROW((IntegerForm{1}), invalid_input);
}

TEST(A0Bound, ParabolaAndCubicShift) {
    const auto c = curves::veronese(2);
    EXPECT_EQ(a0_bound(c, InhomFunction::zero(), 1), 3);
    EXPECT_EQ(a0_bound(c, InhomFunction::zero(), 10), 21);
    EXPECT_EQ(a0_bound(c, InhomFunction::power(3), 1), 4);
    EXPECT_THROW(a0_bound(c, InhomFunction::zero(), 0), domain_error);
}

TEST(EnumerateForms, CountsMatchProduct) {
    const auto e2 = enumerate_forms(curves::veronese(2), InhomFunction::zero(), 1);
    EXPECT_EQ(e2.count(), 7u * 3 * 3 - 1);
    const auto e1 = enumerate_forms(curves::veronese(1), InhomFunction::zero(), 1);
    EXPECT_EQ(e1.count(), 5u * 3 - 1);
    EXPECT_THROW(enumerate_forms(curves::veronese(2), InhomFunction::zero(), 0), domain_error);
}

TEST(EnumerateForms, IterationVisitsEachFormOnce) {
    const auto e = enumerate_forms(curves::veronese(2), InhomFunction::zero(), 2);
    std::set<std::vector<std::int64_t>> seen;
    std::size_t visits = 0;
    e.for_each([&](const IntegerForm& F) {
        ++visits;
        seen.insert(F.coeffs());
        EXPECT_LE(height(F), 2);
        EXPECT_LE(std::llabs(F[0]), e.a0_bound());
    });
    EXPECT_EQ(visits, e.count());
    EXPECT_EQ(seen.size(), e.count());
    std::size_t it_count = 0;
    for (const auto& F : e) {
        (void)F;
        ++it_count;
    }
    EXPECT_EQ(it_count, e.count());
}

TEST(EnumerateForms, BudgetIsEnforced) {
    EXPECT_THROW(enumerate_forms(curves::veronese(2), InhomFunction::zero(), 100, 1000), budget_error);
}

TEST(EvaluatedFormTest, ValueAndDerivatives) {
    const auto c = curves::veronese(2);
    const auto l = InhomFunction::power(3);
    EvaluatedForm G(IntegerForm{-1, 1, 1}, c, l);
    const double x = 0.3;
    EXPECT_NEAR(G(0, x), -1 + x + x * x + x * x * x, 1e-15);
    EXPECT_NEAR(G(1, x), 1 + 2 * x + 3 * x * x, 1e-15);
    EXPECT_NEAR(G(2, x), 2 + 6 * x, 1e-15);
    EXPECT_THROW(EvaluatedForm(IntegerForm{1, 1}, c, l), invalid_input);
}
