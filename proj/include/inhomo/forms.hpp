#pragma once

#include "errors.hpp"
#include "funcspace.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

namespace inhomo {

/// a_0 + a_1 f_1(x) + ... + a_n f_n(x) with integer coefficients, not all zero.
class IntegerForm {
public:
    IntegerForm() = default;
    IntegerForm(std::initializer_list<std::int64_t> c) : a_(c) { check(); }
    explicit IntegerForm(std::vector<std::int64_t> c) : a_(std::move(c)) { check(); }

    int n() const { return static_cast<int>(a_.size()) - 1; }
    std::int64_t operator[](int i) const { return a_[i]; }
    const std::vector<std::int64_t>& coeffs() const { return a_; }

    IntegerForm operator-() const {
        auto c = a_;
        for (auto& x : c) x = -x;
        return IntegerForm(std::move(c));
    }

    friend bool operator==(const IntegerForm&, const IntegerForm&) = default;
    friend auto operator<=>(const IntegerForm&, const IntegerForm&) = default;

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < a_.size(); ++i) s += (i ? "," : "") + std::to_string(a_[i]);
        return s + ")";
    }

private:
    void check() const {
        if (a_.size() < 2) throw invalid_input("integer form needs a_0 and at least a_1");
        for (auto x : a_)
            if (x != 0) return;
        throw invalid_input("integer form with all coefficients zero");
    }

    std::vector<std::int64_t> a_;
};

/// H(F) = max(|a_1|, ..., |a_n|); a_0 excluded.
inline std::int64_t height(const IntegerForm& F) {
    std::int64_t h = 0;
    for (int i = 1; i <= F.n(); ++i) h = std::max<std::int64_t>(h, std::llabs(F[i]));
    return h;
}

/// G^{(j)}(x) = F^{(j)}(x) + lambda^{(j)}(x), evaluated in one pass.
class EvaluatedForm {
public:
    EvaluatedForm(const IntegerForm& F, const CurveSystem& curve, const InhomFunction& lambda)
        : F_(F), curve_(curve), lambda_(lambda) {
        if (F.n() != curve.n()) throw invalid_input("form and curve dimensions differ");
    }

    template <class Real = double>
    Real operator()(int order, Real x) const {
        Real acc = order == 0 ? static_cast<Real>(F_[0]) : Real(0);
        for (int i = 1; i <= F_.n(); ++i)
            if (F_[i] != 0) acc += static_cast<Real>(F_[i]) * curve_.eval<Real>(i, order, x);
        return acc + lambda_.eval<Real>(order, x);
    }

    const IntegerForm& form() const { return F_; }
    const CurveSystem& curve() const { return curve_; }
    const InhomFunction& lambda() const { return lambda_; }

private:
    IntegerForm F_;
    const CurveSystem& curve_;
    const InhomFunction& lambda_;
};

/// B0 = ceil(H * sum_i sup|f_i| + sup|lambda|) + 1.
inline std::int64_t a0_bound(const CurveSystem& curve, const InhomFunction& lambda, std::int64_t H) {
    if (H < 1) throw domain_error("a0_bound: H must be >= 1");
    double s = 0;
    for (int i = 1; i <= curve.n(); ++i) s += curve.sup_abs(i);
    double lam = lambda.sup(0, curve.a(), curve.b(), curve.options().grid_points);
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(H) * s + lam)) + 1;
}

/// max(C of the curve, sup|lambda^{(k)}| for k <= 2): the single constant bounding
/// all derivatives used by the construction.
inline double combined_C(const CurveSystem& curve, const InhomFunction& lambda) {
    double c = curve.C();
    for (int k = 0; k <= 2; ++k) c = std::max(c, lambda.sup(k, curve.a(), curve.b(), curve.options().grid_points));
    return c;
}

/// F_n(H) with |a_0| <= a0_bound, in lexicographic order with a_n outermost
/// and a_0 innermost, each coordinate ascending.
class FormEnumeration {
public:
    FormEnumeration(const CurveSystem& curve, const InhomFunction& lambda, std::int64_t H,
                    std::uint64_t budget = default_form_budget)
        : n_(curve.n()), H_(H) {
        if (H < 1) throw domain_error("enumerate_forms: H must be >= 1");
        B0_ = inhomo::a0_bound(curve, lambda, H);
        unsigned __int128 c = static_cast<unsigned __int128>(2 * B0_ + 1);
        bool overflow = false;
        for (int i = 0; i < n_; ++i) {
            c *= static_cast<unsigned __int128>(2 * H + 1);
            if (c > static_cast<unsigned __int128>(UINT64_MAX)) overflow = true;
        }
        count_ = overflow ? UINT64_MAX : static_cast<std::uint64_t>(c) - 1;
        if (count_ > budget) throw budget_error("enumerate_forms: form count exceeds budget", count_, budget);
    }

    std::uint64_t count() const { return count_; }
    std::int64_t a0_bound() const { return B0_; }
    std::int64_t H() const { return H_; }
    int n() const { return n_; }

    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = IntegerForm;
        using difference_type = std::ptrdiff_t;
        using pointer = const IntegerForm*;
        using reference = const IntegerForm&;

        iterator() = default;
        iterator(const FormEnumeration* e, bool end) : e_(e), done_(end) {
            if (!end) {
                cur_.assign(e->n_ + 1, 0);
                cur_[0] = -e->B0_;
                for (int i = 1; i <= e->n_; ++i) cur_[i] = -e->H_;
                skip_zero();
                form_ = IntegerForm(cur_);
            }
        }
        reference operator*() const { return form_; }
        pointer operator->() const { return &form_; }
        iterator& operator++() {
            advance();
            skip_zero();
            if (!done_) form_ = IntegerForm(cur_);
            return *this;
        }
        void operator++(int) { ++*this; }
        friend bool operator==(const iterator& x, const iterator& y) {
            if (x.done_ || y.done_) return x.done_ == y.done_;
            return x.cur_ == y.cur_;
        }

    private:
        void advance() {
            for (int i = 0; i <= e_->n_; ++i) {
                std::int64_t bound = i == 0 ? e_->B0_ : e_->H_;
                if (cur_[i] < bound) {
                    ++cur_[i];
                    return;
                }
                cur_[i] = -bound;
            }
            done_ = true;
        }
        void skip_zero() {
            if (done_) return;
            for (auto x : cur_)
                if (x != 0) return;
            advance();
        }

        const FormEnumeration* e_ = nullptr;
        bool done_ = true;
        std::vector<std::int64_t> cur_;
        IntegerForm form_;
    };

    iterator begin() const { return iterator(this, false); }
    iterator end() const { return iterator(this, true); }

    /// Visits the sub-stream with a_n fixed (the partition unit for parallel workers).
    template <class Visitor>
    void for_each_in_slice(std::int64_t an, Visitor&& visit) const {
        std::vector<std::int64_t> c(n_ + 1, 0);
        c[n_] = an;
        slice_rec(c, n_ - 1, visit);
    }

    template <class Visitor>
    void for_each(Visitor&& visit) const {
        for (std::int64_t an = -H_; an <= H_; ++an) for_each_in_slice(an, visit);
    }

private:
    template <class Visitor>
    void slice_rec(std::vector<std::int64_t>& c, int i, Visitor& visit) const {
        std::int64_t bound = i == 0 ? B0_ : H_;
        for (std::int64_t x = -bound; x <= bound; ++x) {
            c[i] = x;
            if (i == 0) {
                bool zero = true;
                for (auto y : c) zero = zero && y == 0;
                if (!zero) visit(IntegerForm(c));
            } else {
                slice_rec(c, i - 1, visit);
            }
        }
        c[i] = 0;
    }

    int n_;
    std::int64_t H_;
    std::int64_t B0_;
    std::uint64_t count_;
};

inline FormEnumeration enumerate_forms(const CurveSystem& curve, const InhomFunction& lambda, std::int64_t H,
                                       std::uint64_t budget = default_form_budget) {
    return FormEnumeration(curve, lambda, H, budget);
}

} // namespace inhomo
