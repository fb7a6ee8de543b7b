#pragma once

#include "interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace inhomo::roots {

template <class Real>
constexpr Real rel_tol() {
    return std::numeric_limits<Real>::epsilon() * 4;
}

/// Solves g(x) = y on [lo, hi] where g is monotone and y lies between g(lo) and g(hi).
/// Safeguarded Newton: steps leaving the current bracket are replaced by bisection.
template <class Real, class G, class DG>
Real solve_monotone(const G& g, const DG& dg, Real lo, Real hi, bool increasing, Real y, Real guess) {
    Real x = std::clamp(guess, lo, hi);
    const Real tol = rel_tol<Real>();
    for (int it = 0; it < 200; ++it) {
        Real fx = g(x) - y;
        if (fx == 0) return x;
        if ((fx < 0) == increasing) lo = x; else hi = x;
        if (!(hi - lo > tol * (std::fabs(lo) + std::fabs(hi) + tol))) return (lo + hi) / 2;
        Real d = dg(x);
        Real xn = x - fx / d;
        if (!(xn > lo && xn < hi)) xn = lo + (hi - lo) / 2;
        if (std::fabs(xn - x) <= tol * (std::fabs(x) + tol)) return xn;
        x = xn;
    }
    return x;
}

/// Preimage of [ylo, yhi] under g on the monotone piece [p, q] (gp = g(p), gq = g(q)).
template <class Real, class G, class DG>
std::optional<basic_interval<Real>> monotone_preimage(const G& g, const DG& dg, Real p, Real q, Real gp, Real gq,
                                                      Real ylo, Real yhi) {
    const bool inc = gq >= gp;
    const Real vlo = inc ? gp : gq, vhi = inc ? gq : gp;
    if (yhi < vlo || ylo > vhi) return std::nullopt;
    const Real mid = p + (q - p) / 2;
    const Real xa = ylo <= vlo ? (inc ? p : q) : solve_monotone<Real>(g, dg, p, q, inc, ylo, mid);
    const Real xb = yhi >= vhi ? (inc ? q : p) : solve_monotone<Real>(g, dg, p, q, inc, yhi, mid);
    return basic_interval<Real>{std::min(xa, xb), std::max(xa, xb)};
}

/// Sign-change zeros of h on [a, b] scanned on a uniform grid and refined by bisection.
/// Exact zeros at grid points are reported once.
template <class Real, class H>
std::vector<Real> scan_zeros(const H& h, Real a, Real b, int grid) {
    std::vector<Real> z;
    Real xp = a, hp = h(a);
    if (hp == 0) z.push_back(a);
    for (int k = 1; k <= grid; ++k) {
        Real x = k == grid ? b : a + (b - a) * static_cast<Real>(k) / static_cast<Real>(grid);
        Real hx = h(x);
        if (hx == 0) {
            z.push_back(x);
        } else if (hp != 0 && (hp < 0) != (hx < 0)) {
            Real lo = xp, hi = x;
            bool lo_neg = hp < 0;
            for (int it = 0; it < 200; ++it) {
                Real m = lo + (hi - lo) / 2;
                if (m == lo || m == hi) break;
                Real hm = h(m);
                if (hm == 0) { lo = hi = m; break; }
                if ((hm < 0) == lo_neg) lo = m; else hi = m;
            }
            z.push_back(lo + (hi - lo) / 2);
        }
        xp = x;
        hp = hx;
    }
    return z;
}

/// {x in [a, b] : |g(x)| < thr} given the interior critical points of g (sorted).
template <class Real, class G, class DG>
basic_interval_set<Real> sublevel_abs(const G& g, const DG& dg, Real a, Real b, Real thr,
                                      const std::vector<Real>& critical) {
    std::vector<basic_interval<Real>> out;
    std::vector<Real> cuts{a};
    for (Real c : critical)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    Real gprev = g(cuts[0]);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        Real gn = g(cuts[k + 1]);
        if (auto iv = monotone_preimage<Real>(g, dg, cuts[k], cuts[k + 1], gprev, gn, -thr, thr)) out.push_back(*iv);
        gprev = gn;
    }
    return basic_interval_set<Real>(std::move(out));
}

} // namespace inhomo::roots
