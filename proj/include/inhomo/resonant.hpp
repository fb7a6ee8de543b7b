#pragma once

#include "errors.hpp"
#include "forms.hpp"
#include "parallel.hpp"
#include "planar.hpp"
#include "roots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace inhomo {

struct RootBracket {
    double lo, hi;
    bool certified;  ///< sign change across [lo, hi], or exact zero with G' != 0
};

/// A point of R_lambda found up to height Q, with its lowest-height witness.
struct ResonantPoint {
    double alpha;
    double lo, hi;
    std::int64_t height;
    IntegerForm witness;
    bool certified;
};

namespace detail {

/// Bracket of width 2w around x for G, with the certification rule.
template <class EvalG>
RootBracket certify_root(const EvalG& G, double x, double w, double a, double b) {
    double lo = std::max(a, x - w), hi = std::min(b, x + w);
    double gl = G(0, lo), gh = G(0, hi), gx = G(0, x);
    bool cert = (gl < 0 && gh > 0) || (gl > 0 && gh < 0) || (gx == 0 && G(1, x) != 0);
    if (!cert && (gl == 0 || gh == 0)) cert = G(1, gl == 0 ? lo : hi) != 0;
    return {lo, hi, cert};
}

} // namespace detail

/// Sign-change roots of G = F + lambda on the resolution grid, bisected to
/// width <= 1e-13 |I|. Points where |G| falls below the residual tolerance
/// without a sign change are reported as non-certified (tangential) roots.
inline std::vector<RootBracket> isolate_roots(const IntegerForm& F, const CurveSystem& curve,
                                              const InhomFunction& lambda, double resolution) {
    if (!(resolution > 0)) throw domain_error("isolate_roots: resolution must be positive");
    EvaluatedForm G(F, curve, lambda);
    const double a = curve.a(), b = curve.b(), L = curve.length();
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(L / resolution)));
    const double width = 1e-13 * L;
    double scale = std::fabs(static_cast<double>(F[0]));
    for (int i = 1; i <= F.n(); ++i) scale += std::fabs(static_cast<double>(F[i])) * curve.sup_abs(i);
    const double residual = 64 * std::numeric_limits<double>::epsilon() * (scale + 1);

    std::vector<double> xs(steps + 1), gs(steps + 1);
    for (long k = 0; k <= steps; ++k) {
        xs[k] = k == steps ? b : a + L * static_cast<double>(k) / static_cast<double>(steps);
        gs[k] = G(0, xs[k]);
    }
    std::vector<RootBracket> out;
    for (long k = 0; k <= steps; ++k) {
        if (gs[k] == 0) {
            out.push_back({xs[k], xs[k], G(1, xs[k]) != 0});
            continue;
        }
        if (k > 0 && gs[k - 1] != 0 && (gs[k - 1] < 0) != (gs[k] < 0)) {
            double lo = xs[k - 1], hi = xs[k];
            const bool lo_neg = gs[k - 1] < 0;
            while (hi - lo > width) {
                double m = lo + (hi - lo) / 2;
                if (m == lo || m == hi) break;
                double gm = G(0, m);
                if (gm == 0) { lo = hi = m; break; }
                if ((gm < 0) == lo_neg) lo = m; else hi = m;
            }
            out.push_back({lo, hi, true});
            continue;
        }
        // local minimum of |G| on the grid without sign change
        bool left_ok = k == 0 || (gs[k - 1] != 0 && (gs[k - 1] < 0) == (gs[k] < 0) && std::fabs(gs[k - 1]) >= std::fabs(gs[k]));
        bool right_ok = k == steps || (gs[k + 1] != 0 && (gs[k + 1] < 0) == (gs[k] < 0) && std::fabs(gs[k + 1]) > std::fabs(gs[k]));
        if (left_ok && right_ok && std::fabs(gs[k]) < residual) out.push_back({xs[k], xs[k], false});
    }
    std::sort(out.begin(), out.end(), [](const RootBracket& x, const RootBracket& y) { return x.lo < y.lo; });
    return out;
}

struct ResonantOptions {
    std::uint64_t budget = default_form_budget;
    int workers = 1;
    /// Dedup tolerance relative to |I|.
    double dedup_tol = 1e-12;
    /// Root grid resolution for n != 2; 0 selects min(1e-3 |I|, Q^{-(n+1)} / 10).
    double resolution = 0;
    bool keep_tangential = true;
};

/// Sorted merge with dedup: runs of points closer than tol collapse to the
/// lowest-height witness (ties: smallest witness coefficients).
inline std::vector<ResonantPoint> dedup_resonant(std::vector<ResonantPoint> pts, double tol) {
    std::sort(pts.begin(), pts.end(), [](const ResonantPoint& x, const ResonantPoint& y) {
        if (x.alpha != y.alpha) return x.alpha < y.alpha;
        if (x.height != y.height) return x.height < y.height;
        return x.witness < y.witness;
    });
    std::vector<ResonantPoint> out;
    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i + 1;
        while (j < pts.size() && pts[j].alpha - pts[j - 1].alpha <= tol) ++j;
        std::size_t best = i;
        for (std::size_t k = i + 1; k < j; ++k) {
            const auto& c = pts[k];
            const auto& b = pts[best];
            if (c.height < b.height || (c.height == b.height && c.witness < b.witness)) best = k;
        }
        ResonantPoint r = pts[best];
        r.certified = false;
        for (std::size_t k = i; k < j; ++k)
            if (pts[k].height == r.height && pts[k].certified) r.certified = true;
        out.push_back(std::move(r));
        i = j;
    }
    return out;
}

/// Streams every root of every planar form with H(F) <= Q in the window [lo, hi]
/// as fn(alpha, a0, a1, a2). With `reduced`, only canonical-sign primitive forms
/// are visited (the root set is unchanged when lambda = 0).
template <class Fn>
void for_each_planar_root(const PlanarContext& ctx, std::int64_t Q, double lo, double hi, bool reduced,
                          std::int64_t a2, Fn&& fn) {
    for_each_a1(a2, 0, Q, [&](std::int64_t a1) {
        if (reduced && !canonical_pair(a1, a2)) return;
        const std::int64_t g12 = std::gcd(std::llabs(a1), std::llabs(a2));
        PairModel<double> m(ctx, a1, a2);
        for (const auto& pc : m.pieces(lo, hi))
            m.solutions(pc, 0.0, std::numeric_limits<std::int64_t>::min() / 4,
                        std::numeric_limits<std::int64_t>::max() / 4, [&](std::int64_t a0, double x, double) {
                            if (reduced && g12 != 1 && std::gcd(g12, std::llabs(a0)) != 1) return;
                            fn(x, a0, a1, a2);
                        });
    });
}

/// R_lambda restricted to forms of F_n(Q), deduplicated, sorted by alpha.
inline std::vector<ResonantPoint> enumerate_resonant(const CurveSystem& curve, const InhomFunction& lambda,
                                                     std::int64_t Q, const ResonantOptions& opt = {}) {
    if (Q < 1) throw domain_error("enumerate_resonant: Q must be >= 1");
    const double tol = opt.dedup_tol * curve.length();
    const double w = 0.5e-13 * curve.length();
    std::vector<std::vector<ResonantPoint>> slices;
    if (curve.n() == 2) {
        check_sweep_budget(curve, Q, opt.budget, "enumerate_resonant");
        PlanarContext ctx(curve, lambda);
        slices = parallel_map<std::vector<ResonantPoint>>(
            static_cast<std::size_t>(2 * Q + 1), opt.workers, [&](std::size_t idx) {
                const std::int64_t a2 = static_cast<std::int64_t>(idx) - Q;
                std::vector<ResonantPoint> pts;
                for_each_planar_root(ctx, Q, curve.a(), curve.b(), false, a2,
                                     [&](double x, std::int64_t a0, std::int64_t a1, std::int64_t a2v) {
                                         IntegerForm F{a0, a1, a2v};
                                         EvaluatedForm G(F, curve, lambda);
                                         auto br = detail::certify_root(G, x, w, curve.a(), curve.b());
                                         if (!br.certified && !opt.keep_tangential) return;
                                         pts.push_back({x, br.lo, br.hi, height(F), F, br.certified});
                                     });
                return pts;
            });
    } else {
        FormEnumeration forms(curve, lambda, Q, opt.budget);
        const int n = curve.n();
        const double res = opt.resolution > 0
                               ? opt.resolution
                               : std::min(1e-3 * curve.length(), std::pow(static_cast<double>(Q), -(n + 1)) / 10);
        slices = parallel_map<std::vector<ResonantPoint>>(
            static_cast<std::size_t>(2 * Q + 1), opt.workers, [&](std::size_t idx) {
                const std::int64_t an = static_cast<std::int64_t>(idx) - Q;
                std::vector<ResonantPoint> pts;
                forms.for_each_in_slice(an, [&](const IntegerForm& F) {
                    for (const auto& br : isolate_roots(F, curve, lambda, res)) {
                        if (!br.certified && !opt.keep_tangential) continue;
                        pts.push_back({(br.lo + br.hi) / 2, br.lo, br.hi, height(F), F, br.certified});
                    }
                });
                return pts;
            });
    }
    std::vector<ResonantPoint> all;
    for (auto& s : slices) all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    return dedup_resonant(std::move(all), tol);
}

struct NearestResult {
    double alpha;
    double distance;
    std::size_t index;
};

/// Closest point to x in a list sorted by alpha; ties go to the smaller alpha.
inline NearestResult nearest_resonant(const std::vector<ResonantPoint>& pts, double x) {
    if (pts.empty()) throw domain_error("nearest_resonant: empty list");
    auto it = std::lower_bound(pts.begin(), pts.end(), x,
                               [](const ResonantPoint& p, double v) { return p.alpha < v; });
    std::size_t best = it == pts.end() ? pts.size() - 1 : static_cast<std::size_t>(it - pts.begin());
    if (best > 0) {
        double dl = x - pts[best - 1].alpha, dr = std::fabs(pts[best].alpha - x);
        if (dl <= dr) best -= 1;
    }
    return {pts[best].alpha, std::fabs(x - pts[best].alpha), best};
}

} // namespace inhomo
