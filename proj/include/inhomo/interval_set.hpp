#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace inhomo {

template <class Real>
struct basic_interval {
    Real lo;
    Real hi;

    Real length() const { return hi - lo; }
    friend bool operator==(const basic_interval&, const basic_interval&) = default;
};

/// Sorted, pairwise disjoint finite union of closed intervals.
///
/// Normalization sorts by left endpoint and merges any pair with
/// next.lo <= cur.hi, so after it r_i < l_{i+1} holds strictly.
/// The measure is the left-to-right sum of the stored lengths.
template <class Real>
class basic_interval_set {
public:
    using interval = basic_interval<Real>;

    basic_interval_set() = default;

    /// Builds a normalized set from arbitrary (possibly overlapping) intervals.
    /// Intervals with hi < lo are dropped.
    explicit basic_interval_set(std::vector<interval> raw) : items_(std::move(raw)) { normalize(); }

    static basic_interval_set single(Real lo, Real hi) { return basic_interval_set({{lo, hi}}); }

    /// Builds from intervals already sorted by lo (skips the sort).
    static basic_interval_set from_sorted(std::vector<interval> sorted) {
        basic_interval_set s;
        s.items_ = std::move(sorted);
        s.merge_sorted();
        return s;
    }

    const std::vector<interval>& intervals() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    Real measure() const {
        Real m = 0;
        for (const auto& iv : items_) m += iv.hi - iv.lo;
        return m;
    }

    bool contains(Real x) const {
        auto it = std::upper_bound(items_.begin(), items_.end(), x,
                                   [](Real v, const interval& iv) { return v < iv.lo; });
        if (it == items_.begin()) return false;
        --it;
        return x <= it->hi;
    }

    basic_interval_set unite(const basic_interval_set& other) const {
        std::vector<interval> all;
        all.reserve(items_.size() + other.items_.size());
        std::merge(items_.begin(), items_.end(), other.items_.begin(), other.items_.end(),
                   std::back_inserter(all), [](const interval& a, const interval& b) { return a.lo < b.lo; });
        return from_sorted(std::move(all));
    }

    basic_interval_set intersect(const basic_interval_set& other) const {
        std::vector<interval> out;
        std::size_t i = 0, j = 0;
        const auto& a = items_;
        const auto& b = other.items_;
        while (i < a.size() && j < b.size()) {
            Real lo = std::max(a[i].lo, b[j].lo);
            Real hi = std::min(a[i].hi, b[j].hi);
            if (lo <= hi) out.push_back({lo, hi});
            if (a[i].hi < b[j].hi) ++i; else ++j;
        }
        basic_interval_set s;
        s.items_ = std::move(out);
        return s;
    }

    basic_interval_set clip(Real lo, Real hi) const { return intersect(single(lo, hi)); }

    /// Complement inside [lo, hi].
    basic_interval_set complement_in(Real lo, Real hi) const {
        std::vector<interval> out;
        Real cur = lo;
        for (const auto& iv : clip(lo, hi).items_) {
            if (iv.lo > cur) out.push_back({cur, iv.lo});
            cur = std::max(cur, iv.hi);
        }
        if (cur < hi) out.push_back({cur, hi});
        basic_interval_set s;
        s.items_ = std::move(out);
        return s;
    }

    friend bool operator==(const basic_interval_set&, const basic_interval_set&) = default;

private:
    void normalize() {
        std::sort(items_.begin(), items_.end(), [](const interval& a, const interval& b) {
            return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
        });
        merge_sorted();
    }

    void merge_sorted() {
        std::size_t w = 0;
        for (std::size_t r = 0; r < items_.size(); ++r) {
            const interval iv = items_[r];
            if (!(iv.lo <= iv.hi)) continue;
            if (w > 0 && iv.lo <= items_[w - 1].hi) {
                items_[w - 1].hi = std::max(items_[w - 1].hi, iv.hi);
            } else {
                items_[w++] = iv;
            }
        }
        items_.resize(w);
    }

    std::vector<interval> items_;
};

using Interval = basic_interval<double>;
using IntervalSet = basic_interval_set<double>;

} // namespace inhomo
