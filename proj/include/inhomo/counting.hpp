#pragma once

#include "errors.hpp"
#include "forms.hpp"
#include "funcspace.hpp"
#include "interval_set.hpp"
#include "parallel.hpp"
#include "planar.hpp"
#include "roots.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace inhomo {

struct PhiOptions {
    std::uint64_t budget = default_form_budget;
    int workers = 1;
    /// Upper bound on intervals held per pass before the x-range is split.
    std::size_t max_intervals_per_pass = 4'000'000;
    /// Critical-point scan grid for n != 2.
    int scan_grid = 2048;
};

/// Phi(Q, delta) ∩ J: the union over F in F_n(Q) of {x in J : |F(x)| < delta Q^{-n}}
/// (homogeneous forms, lambda not involved).
inline IntervalSet phi_measure(const CurveSystem& curve, std::int64_t Q, double delta, Interval J,
                               const PhiOptions& opt = {}) {
    if (!(delta > 0 && delta <= 1)) throw domain_error("phi_measure: delta must lie in (0, 1]");
    if (!(J.lo >= curve.a() && J.hi <= curve.b() && J.lo <= J.hi)) throw domain_error("phi_measure: J must lie in I");
    const InhomFunction zero = InhomFunction::zero();
    const int n = curve.n();
    const double thr = delta * std::pow(static_cast<double>(Q), -n);
    if (n != 2) {
        FormEnumeration forms(curve, zero, Q, opt.budget);
        auto parts = parallel_map<std::vector<Interval>>(
            static_cast<std::size_t>(2 * Q + 1), opt.workers, [&](std::size_t idx) {
                std::vector<Interval> out;
                forms.for_each_in_slice(static_cast<std::int64_t>(idx) - Q, [&](const IntegerForm& F) {
                    EvaluatedForm G(F, curve, zero);
                    auto g = [&](double x) { return G(0, x); };
                    auto dg = [&](double x) { return G(1, x); };
                    auto crit = roots::scan_zeros<double>(dg, J.lo, J.hi, opt.scan_grid);
                    for (const auto& iv : roots::sublevel_abs<double>(g, dg, J.lo, J.hi, thr, crit)) out.push_back(iv);
                });
                return out;
            });
        std::vector<Interval> all;
        for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        return IntervalSet(std::move(all));
    }
    check_sweep_budget(curve, Q, opt.budget, "phi_measure");
    PlanarContext ctx(curve, zero);
    // rough interval count: one per root, about Q^3 |J| / 2 canonical primitive forms
    const double est = 0.6 * std::pow(static_cast<double>(Q), 3) * (J.hi - J.lo) + 1;
    const int passes = std::max(1, static_cast<int>(std::ceil(est / static_cast<double>(opt.max_intervals_per_pass))));
    IntervalSet result;
    for (int pass = 0; pass < passes; ++pass) {
        const double lo = J.lo + (J.hi - J.lo) * pass / passes;
        const double hi = pass + 1 == passes ? J.hi : J.lo + (J.hi - J.lo) * (pass + 1) / passes;
        auto parts = parallel_map<std::vector<Interval>>(
            static_cast<std::size_t>(Q + 1), opt.workers, [&](std::size_t idx) {
                const auto a2 = static_cast<std::int64_t>(idx);
                std::vector<Interval> out;
                for_each_a1(a2, 0, Q, [&](std::int64_t a1) {
                    if (!canonical_pair(a1, a2)) return;
                    const std::int64_t g12 = std::gcd(std::llabs(a1), std::llabs(a2));
                    PairModel<double> m(ctx, a1, a2);
                    for (const auto& pc : m.pieces(lo, hi))
                        m.solutions(pc, thr, -(1LL << 40), 1LL << 40, [&](std::int64_t a0, double l, double r) {
                            if (g12 != 1 && std::gcd(g12, std::llabs(a0)) != 1) return;
                            out.push_back({l, r});
                        });
                });
                return IntervalSet(std::move(out)).intervals();
            });
        std::vector<Interval> all;
        for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        result = result.unite(IntervalSet(std::move(all)));
    }
    return result;
}

/// Membership x in Phi(Q, delta) for real Q: some F with H(F) <= Q has |F(x)| < delta Q^{-n}.
inline bool phi_contains(const CurveSystem& curve, double Q, double delta, double x) {
    const int n = curve.n();
    const auto Hq = static_cast<std::int64_t>(std::floor(Q));
    if (Hq < 1) return false;
    const long double thr = delta * std::pow(Q, -n);
    std::vector<long double> fx(n + 1);
    for (int i = 1; i <= n; ++i) fx[i] = curve.eval<long double>(i, 0, x);
    std::vector<std::int64_t> a(n + 1, -Hq);
    for (;;) {
        long double v = 0;
        bool nz = false;
        for (int i = 1; i <= n; ++i) {
            v += static_cast<long double>(a[i]) * fx[i];
            nz = nz || a[i] != 0;
        }
        const long double a0 = -std::nearbyint(v);
        if ((nz || a0 != 0) && std::fabs(a0 + v) < thr) return true;
        int i = 1;
        while (i <= n && a[i] == Hq) a[i++] = -Hq;
        if (i > n) break;
        ++a[i];
    }
    return false;
}

struct CountReport {
    std::int64_t H;
    double delta;
    double v;
    std::uint64_t N_upper;  ///< undecidable pieces counted as solutions
    std::uint64_t N_lower;  ///< undecidable pieces counted as non-solutions
    double ratio_upper;     ///< N_upper / H^{1+delta}
    double ratio_lower;
    std::uint64_t pairs;    ///< (a1, a2) pairs examined
    bool shell;             ///< only pairs with max(|a1|, |a2|) = H
};

namespace detail {

/// Number of a0 with |a0| <= H admitting x in I with |a0 + P| <= H^{-v}, |P'| <= H^delta,
/// for one pair; `outward` selects the upper (true) or lower (false) decision.
inline std::uint64_t count_pair(const PlanarContext& ctx, std::int64_t a1, std::int64_t a2, std::int64_t H,
                                double thr, double cap, bool outward, double slack) {
    PairModel<double> m(ctx, a1, a2);
    const double s = outward ? slack : -slack;
    const double capx = outward ? cap * (1 + 1e-12) + slack : cap * (1 - 1e-12) - slack;
    if (capx < 0) return 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    for (const auto& pc : m.pieces(ctx.curve().a(), ctx.curve().b(), capx)) {
        const double vlo = std::min(pc.Pp, pc.Pq), vhi = std::max(pc.Pp, pc.Pq);
        auto lo = static_cast<std::int64_t>(std::ceil(-vhi - thr - s));
        auto hi = static_cast<std::int64_t>(std::floor(-vlo + thr + s));
        lo = std::max(lo, -H);
        hi = std::min(hi, H);
        if (lo <= hi) ranges.push_back({lo, hi});
    }
    std::sort(ranges.begin(), ranges.end());
    std::uint64_t cnt = 0;
    std::int64_t cur_lo = 0, cur_hi = -1;
    bool open = false;
    auto flush = [&] {
        if (!open) return;
        cnt += static_cast<std::uint64_t>(cur_hi - cur_lo + 1);
        if (a1 == 0 && a2 == 0 && cur_lo <= 0 && 0 <= cur_hi) --cnt;  // the zero vector is not a form
    };
    for (auto [lo, hi] : ranges) {
        if (open && lo <= cur_hi + 1) {
            cur_hi = std::max(cur_hi, hi);
        } else {
            flush();
            cur_lo = lo;
            cur_hi = hi;
            open = true;
        }
    }
    flush();
    return cnt;
}

} // namespace detail

/// Exact count of triples (a0, a1, a2), max |a_i| <= H, for which some x in I has
/// |G(x)| <= H^{-v} and |G'(x)| <= H^delta. With `shell` only pairs of height exactly H
/// (max(|a1|, |a2|) = H) enter; that is the set the H^{1+delta} argument counts.
inline CountReport count_N(const CurveSystem& curve, const InhomFunction& lambda, std::int64_t H, double delta,
                           double v, int workers = 1, bool shell = false) {
    if (curve.n() != 2) throw domain_error("count_N: planar curves only (n = 2)");
    if (H < 2) throw domain_error("count_N: H must be >= 2");
    if (!(delta >= 0 && delta <= 1)) throw domain_error("count_N: delta must lie in [0, 1]");
    if (!(v > 0)) throw domain_error("count_N: v must be positive");
    PlanarContext ctx(curve, lambda);
    const double Hd = static_cast<double>(H);
    const double thr = std::pow(Hd, -v), cap = std::pow(Hd, delta);
    const double slack = 64 * std::numeric_limits<double>::epsilon() *
                         (Hd * (1 + curve.C()) + lambda.sup(0, curve.a(), curve.b()) + 1);
    auto parts = parallel_map<std::array<std::uint64_t, 3>>(
        static_cast<std::size_t>(2 * H + 1), workers, [&](std::size_t idx) {
            const std::int64_t a2 = static_cast<std::int64_t>(idx) - H;
            std::array<std::uint64_t, 3> acc{0, 0, 0};
            for_each_a1(a2, shell ? H : 0, H, [&](std::int64_t a1) {
                acc[0] += detail::count_pair(ctx, a1, a2, H, thr, cap, true, slack);
                acc[1] += detail::count_pair(ctx, a1, a2, H, thr, cap, false, slack);
                acc[2] += 1;
            });
            return acc;
        });
    CountReport r{H, delta, v, 0, 0, 0, 0, 0, shell};
    for (const auto& p : parts) {
        r.N_upper += p[0];
        r.N_lower += p[1];
        r.pairs += p[2];
    }
    const double norm = std::pow(Hd, 1 + delta);
    r.ratio_upper = static_cast<double>(r.N_upper) / norm;
    r.ratio_lower = static_cast<double>(r.N_lower) / norm;
    return r;
}

struct PyartlyResult {
    double measure;
    double bound;  ///< (nu / delta)^{1/n}
    double c;      ///< measure / bound
};

/// Measure of {x in J : |phi(x)| < nu} for phi with |phi^{(n)}| > delta on J.
inline PyartlyResult pyartly_check(const Smooth& phi, double nu, int n, double delta, Interval J,
                                   int grid_points = 10000) {
    if (!(nu > 0 && delta > 0) || n < 1) throw domain_error("pyartly_check: need nu > 0, delta > 0, n >= 1");
    if (phi.max_order() < n) throw domain_error("pyartly_check: phi must supply derivatives up to order n");
    for (double x : detail::grid(J.lo, J.hi, grid_points))
        if (!(std::fabs(phi.eval<double>(n, x)) > delta))
            throw domain_error("pyartly_check: |phi^(n)| > delta fails at x = " + std::to_string(x));
    auto g = [&](double x) { return phi.eval<double>(0, x); };
    auto dg = [&](double x) { return phi.eval<double>(1, x); };
    std::vector<double> crit = n >= 2 ? roots::scan_zeros<double>(dg, J.lo, J.hi, 4096) : std::vector<double>{};
    const double m = roots::sublevel_abs<double>(g, dg, J.lo, J.hi, nu, crit).measure();
    const double bound = std::pow(nu / delta, 1.0 / n);
    return {m, bound, m / bound};
}

struct DichotomyReport {
    double C1_empirical;  ///< min over samples of max(min|G'|, min|G''|) / H
    std::int64_t worst_a1, worst_a2;
    double worst_x;       ///< left end of the worst subinterval
    std::uint64_t samples;
    std::uint64_t violations;  ///< samples with max(...) / H <= floor
    double floor;
};

/// Derivative dichotomy (min|G'| or min|G''| of order H) over all pairs with max(|a1|, |a2|) = H for H in H_values and
/// a partition of I into subintervals of length <= subinterval_len.
inline DichotomyReport dichotomy_check(const CurveSystem& curve, const InhomFunction& lambda,
                                       const std::vector<std::int64_t>& H_values, double subinterval_len,
                                       double floor = 0.0, int probes = 33) {
    if (curve.n() != 2) throw domain_error("dichotomy_check: n must be 2");
    if (!(curve.c1() > 0)) throw domain_error("dichotomy_check: curvature bound c1 must be positive");
    PlanarContext ctx(curve, lambda);
    const int cells = std::max(1, static_cast<int>(std::ceil(curve.length() / subinterval_len)));
    DichotomyReport rep{std::numeric_limits<double>::infinity(), 0, 0, 0, 0, 0, floor};
    for (std::int64_t H : H_values) {
        for (std::int64_t a2 = -H; a2 <= H; ++a2) {
            for_each_a1(a2, H, H, [&](std::int64_t a1) {
                PairModel<double> m(ctx, a1, a2);
                for (int c = 0; c < cells; ++c) {
                    const double lo = curve.a() + curve.length() * c / cells;
                    const double hi = c + 1 == cells ? curve.b() : curve.a() + curve.length() * (c + 1) / cells;
                    // min |P'| on [lo, hi]: endpoints and interior zeros of P''
                    double m1 = std::min(std::fabs(m.dP(lo)), std::fabs(m.dP(hi)));
                    if ((m.dP(lo) < 0) != (m.dP(hi) < 0)) m1 = 0;
                    for (double z : m.inflections(lo, hi)) m1 = std::min(m1, std::fabs(m.dP(z)));
                    double m2 = std::numeric_limits<double>::infinity();
                    double prev = m.d2P(lo);
                    for (int k = 0; k <= probes; ++k) {
                        double x = lo + (hi - lo) * k / probes;
                        double d2 = m.d2P(x);
                        if ((d2 < 0) != (prev < 0)) m2 = 0;
                        m2 = std::min(m2, std::fabs(d2));
                        prev = d2;
                    }
                    const double val = std::max(m1, m2) / static_cast<double>(H);
                    ++rep.samples;
                    if (val <= floor) ++rep.violations;
                    if (val < rep.C1_empirical) {
                        rep.C1_empirical = val;
                        rep.worst_a1 = a1;
                        rep.worst_a2 = a2;
                        rep.worst_x = lo;
                    }
                }
            });
        }
    }
    return rep;
}

using Point3 = std::array<std::int64_t, 3>;

struct TriangleResult {
    double area;
    double bound;  ///< (1/2) sqrt(A^2 + B^2 + C^2)
    std::array<Point3, 3> witness;
    std::int64_t multiple;  ///< area = multiple * bound
    bool respects_bound;
};

inline Point3 cross(const Point3& u, const Point3& w) {
    return {u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]};
}

/// Integer points of Ax + By + Cz = D inside [-r, r]^3.
inline std::vector<Point3> plane_points(std::int64_t A, std::int64_t B, std::int64_t C, std::int64_t D,
                                        std::int64_t r) {
    const Point3 n{A, B, C};
    int k = 2;
    while (k >= 0 && n[k] == 0) --k;
    if (k < 0) throw domain_error("plane normal must be nonzero");
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    std::vector<Point3> pts;
    for (std::int64_t u = -r; u <= r; ++u)
        for (std::int64_t w = -r; w <= r; ++w) {
            std::int64_t rest = D - n[i] * u - n[j] * w;
            if (rest % n[k] != 0) continue;
            std::int64_t z = rest / n[k];
            if (z < -r || z > r) continue;
            Point3 p{};
            p[i] = u;
            p[j] = w;
            p[k] = z;
            pts.push_back(p);
        }
    std::sort(pts.begin(), pts.end());
    return pts;
}

/// Exhaustive minimum triangle area over integer points of the plane in the box.
/// The cross product of two in-plane integer vectors is an integer multiple k of
/// the primitive normal, so area = |k| * bound and |k| = 1 ends the search.
inline TriangleResult min_triangle_area(std::int64_t A, std::int64_t B, std::int64_t C, std::int64_t D,
                                        std::int64_t box_radius) {
    if (std::gcd(std::gcd(std::llabs(A), std::llabs(B)), std::llabs(C)) != 1)
        throw domain_error("min_triangle_area: gcd(A, B, C) must be 1");
    const Point3 n{A, B, C};
    int k = 0;
    while (n[k] == 0) ++k;
    const auto pts = plane_points(A, B, C, D, box_radius);
    const double bound = 0.5 * std::sqrt(static_cast<double>(A * A + B * B + C * C));
    std::int64_t best = 0;
    std::array<Point3, 3> wit{};
    for (std::size_t a = 0; a < pts.size() && best != 1; ++a)
        for (std::size_t b = a + 1; b < pts.size() && best != 1; ++b) {
            const Point3 d1{pts[b][0] - pts[a][0], pts[b][1] - pts[a][1], pts[b][2] - pts[a][2]};
            for (std::size_t c = b + 1; c < pts.size(); ++c) {
                const Point3 d2{pts[c][0] - pts[a][0], pts[c][1] - pts[a][1], pts[c][2] - pts[a][2]};
                const Point3 x = cross(d1, d2);
                const std::int64_t mult = std::llabs(x[k] / n[k]);
                if (mult == 0) continue;
                if (best == 0 || mult < best) {
                    best = mult;
                    wit = {pts[a], pts[b], pts[c]};
                    if (best == 1) break;
                }
            }
        }
    if (best == 0) throw domain_error("min_triangle_area: box too small (fewer than 3 non-collinear points)");
    const Point3 d1{wit[1][0] - wit[0][0], wit[1][1] - wit[0][1], wit[1][2] - wit[0][2]};
    const Point3 d2{wit[2][0] - wit[0][0], wit[2][1] - wit[0][1], wit[2][2] - wit[0][2]};
    const Point3 x = cross(d1, d2);
    const double area = 0.5 * std::sqrt(static_cast<double>(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    return {area, bound, wit, best, area >= bound - 1e-9};
}

} // namespace inhomo
