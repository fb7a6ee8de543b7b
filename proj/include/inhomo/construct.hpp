#pragma once

#include "counting.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "funcspace.hpp"
#include "lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace inhomo {

/// {a in R^{n+1} : |a_0 + sum a_i f_i(xi)| < Q^{-n}, |a_i| <= Q}.
struct ConvexBodyInstance {
    double xi;
    double Q;
    const CurveSystem* curve;

    int n() const { return curve->n(); }

    /// Smallest dilation lambda with a in lambda * body (closure).
    long double gauge(const lattice::IVec& a) const {
        long double L = static_cast<long double>(a[0]);
        long double h = 0;
        for (int i = 1; i <= n(); ++i) {
            L += static_cast<long double>(a[i]) * curve->eval<long double>(i, 0, xi);
            h = std::max<long double>(h, std::fabs(static_cast<long double>(a[i])));
        }
        return std::max(std::fabs(L) * std::pow(static_cast<long double>(Q), n()), h / static_cast<long double>(Q));
    }
};

struct ShortVectors {
    std::vector<lattice::IVec> vectors;  ///< F_1, ..., F_{n+1}, coefficients (a_0, ..., a_n)
    std::vector<double> minima;          ///< gauge of each vector (tau_1..tau_{n+1} when exact)
    double C2;                           ///< max gauge
    bool exact;                          ///< exhaustive (true) or basis reduction (false)
};

struct ShortVectorOptions {
    /// Exhaustive search up to this Q, basis reduction above.
    double exhaustive_max_Q = 256;
    std::uint64_t budget = 50'000'000;
};

/// n+1 independent integer vectors with |F_j(xi)| <= C2 Q^{-n}, |a_i^{(j)}| <= C2 Q.
inline ShortVectors independent_short_vectors(const ConvexBodyInstance& body, const ShortVectorOptions& opt = {}) {
    const int n = body.n();
    if (!body.curve->contains(body.xi)) throw domain_error("independent_short_vectors: xi outside I");
    if (!(body.Q >= 1)) throw domain_error("independent_short_vectors: Q must be >= 1");
    const long double Qn = std::pow(static_cast<long double>(body.Q), n);
    std::vector<long double> fx(n + 1);
    for (int i = 1; i <= n; ++i) fx[i] = body.curve->eval<long double>(i, 0, body.xi);

    if (body.Q <= opt.exhaustive_max_Q) {
        for (long double R = 1;; R *= 2) {
            const auto span = static_cast<std::int64_t>(std::floor(R * body.Q));
            const long double shell = std::pow(static_cast<long double>(2 * span + 1), n);
            if (shell > static_cast<long double>(opt.budget))
                throw budget_error("independent_short_vectors: shell too large", static_cast<std::uint64_t>(shell),
                                   opt.budget);
            std::vector<std::pair<long double, lattice::IVec>> cand;
            lattice::IVec a(n + 1, -span);
            for (;;) {
                long double P = 0;
                for (int i = 1; i <= n; ++i) P += static_cast<long double>(a[i]) * fx[i];
                const long double w = R / Qn;
                for (auto a0 = static_cast<std::int64_t>(std::ceil(-P - w)); a0 <= static_cast<std::int64_t>(std::floor(-P + w)); ++a0) {
                    a[0] = a0;
                    bool zero = true;
                    for (auto x : a) zero = zero && x == 0;
                    if (zero) continue;
                    long double g = body.gauge(a);
                    if (g <= R) cand.push_back({g, a});
                }
                int i = 1;
                while (i <= n && a[i] == span) a[i++] = -span;
                if (i > n) break;
                ++a[i];
            }
            std::sort(cand.begin(), cand.end());
            ShortVectors sv{{}, {}, 0, true};
            for (auto& [g, v] : cand) {
                auto trial = sv.vectors;
                trial.push_back(v);
                if (lattice::rank(trial) == static_cast<int>(trial.size())) {
                    sv.vectors = std::move(trial);
                    sv.minima.push_back(static_cast<double>(g));
                    if (static_cast<int>(sv.vectors.size()) == n + 1) break;
                }
            }
            if (static_cast<int>(sv.vectors.size()) == n + 1) {
                sv.C2 = sv.minima.back();
                return sv;
            }
        }
    }
    // basis reduction on the image lattice a -> (Q^n L(a), a_1 / Q, ..., a_n / Q)
    std::vector<std::vector<long double>> B(n + 1, std::vector<long double>(n + 1, 0));
    for (int j = 0; j <= n; ++j) B[0][j] = Qn * (j == 0 ? 1.0L : fx[j]);
    for (int i = 1; i <= n; ++i) B[i][i] = 1.0L / static_cast<long double>(body.Q);
    auto basis = lattice::lll(B);
    std::vector<std::pair<long double, lattice::IVec>> sorted;
    for (auto& v : basis) sorted.push_back({body.gauge(v), v});
    std::sort(sorted.begin(), sorted.end());
    ShortVectors sv{{}, {}, 0, false};
    for (auto& [g, v] : sorted) {
        sv.vectors.push_back(v);
        sv.minima.push_back(static_cast<double>(g));
    }
    sv.C2 = sv.minima.back();
    return sv;
}

/// Paper constants derived from C2, the derivative bound C and n.
struct ConstructionConstants {
    double C, C1, C2, C3, C4, C5, C6, C7, M, K1, K2;

    static ConstructionConstants from(int n, double C, double C1, double C2) {
        ConstructionConstants k{};
        const double n1 = n + 1;
        k.C = C;
        k.C1 = C1;
        k.C2 = C2;
        k.C3 = n1 * C2;
        k.C4 = 1 + 2 * n1 * n1 * C2 * C;
        k.C5 = n1 * C2;
        k.C6 = k.C4 + (n - 1) * n1 * C2 * C + C;
        k.C7 = k.C3 + (n - 1) * n1 * C2 * C + k.C6 * C + C;
        k.M = n * C;
        k.K1 = std::max({k.C5, k.C6, k.C7});
        k.K2 = 2 * k.C3;
        return k;
    }
};

enum class RhsVariant { as_printed, all_terms };

inline const char* to_string(RhsVariant v) { return v == RhsVariant::as_printed ? "as_printed" : "all_terms"; }

struct RoundingResult {
    std::vector<double> theta;
    std::vector<std::int64_t> t;
    std::optional<IntegerForm> form;  ///< empty when all x_i vanish
    double G;                          ///< G(xi) = F(xi) + lambda(xi)
    double dG;                         ///< G'(xi)
};

/// Solves the linear system fixing G(xi) = 0, G'(xi) = Q + sum |F_j'(xi)| and
/// killing coefficients 2..n, then rounds theta to the nearest integers.
inline RoundingResult solve_rounding_system(const std::vector<lattice::IVec>& vecs, double xi, const CurveSystem& curve,
                                            const InhomFunction& lambda, double Q,
                                            RhsVariant variant = RhsVariant::as_printed) {
    const int n = curve.n();
    if (static_cast<int>(vecs.size()) != n + 1) throw degenerate_vectors("need n+1 vectors");
    if (lattice::determinant(vecs) == 0) throw degenerate_vectors("vectors are linearly dependent");
    const int d = n + 1;
    std::vector<long double> f(n + 1), df(n + 1);
    for (int i = 1; i <= n; ++i) {
        f[i] = curve.eval<long double>(i, 0, xi);
        df[i] = curve.eval<long double>(i, 1, xi);
    }
    std::vector<std::vector<long double>> A(d, std::vector<long double>(d + 1, 0));
    std::vector<long double> Fv(d), dFv(d);
    for (int j = 0; j < d; ++j) {
        Fv[j] = static_cast<long double>(vecs[j][0]);
        dFv[j] = 0;
        for (int i = 1; i <= n; ++i) {
            Fv[j] += vecs[j][i] * f[i];
            dFv[j] += vecs[j][i] * df[i];
        }
    }
    long double sum_abs = 0;
    const int terms = variant == RhsVariant::as_printed ? n : n + 1;
    for (int j = 0; j < terms; ++j) sum_abs += std::fabs(dFv[j]);
    for (int j = 0; j < d; ++j) {
        A[0][j] = Fv[j];
        A[1][j] = dFv[j];
        for (int r = 2; r <= n; ++r) A[r][j] = static_cast<long double>(vecs[j][r]);
    }
    A[0][d] = -lambda.eval<long double>(0, xi);
    A[1][d] = static_cast<long double>(Q) + sum_abs - lambda.eval<long double>(1, xi);
    for (int c = 0; c < d; ++c) {
        int piv = c;
        for (int r = c + 1; r < d; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        if (A[piv][c] == 0) throw degenerate_vectors("rounding system is singular");
        std::swap(A[c], A[piv]);
        for (int r = 0; r < d; ++r) {
            if (r == c) continue;
            long double fct = A[r][c] / A[c][c];
            for (int k = c; k <= d; ++k) A[r][k] -= fct * A[c][k];
        }
    }
    RoundingResult res;
    std::vector<std::int64_t> x(n + 1, 0);
    for (int j = 0; j < d; ++j) {
        long double th = A[j][d] / A[j][j];
        res.theta.push_back(static_cast<double>(th));
        res.t.push_back(static_cast<std::int64_t>(std::llround(th)));
    }
    for (int j = 0; j < d; ++j)
        for (int i = 0; i <= n; ++i) x[i] += res.t[j] * vecs[j][i];
    bool zero = std::all_of(x.begin(), x.end(), [](std::int64_t v) { return v == 0; });
    if (!zero) res.form = IntegerForm(x);
    long double G = lambda.eval<long double>(0, xi) + static_cast<long double>(x[0]);
    long double dG = lambda.eval<long double>(1, xi);
    for (int i = 1; i <= n; ++i) {
        G += x[i] * f[i];
        dG += x[i] * df[i];
    }
    res.G = static_cast<double>(G);
    res.dG = static_cast<double>(dG);
    return res;
}

struct LocalizeResult {
    bool ok = false;           ///< sign change at the ends of the localization interval
    double alpha = 0;
    double lo = 0, hi = 0;     ///< final bisection bracket
    double radius = 0;         ///< 2 C3 Q^{-n-1}
    bool hypothesis = false;   ///< localization inequality on Q
    bool sign_preserved = false;  ///< G' keeps its sign at 10 interior points
    std::string failure;
};

/// Localization hypothesis (n C C7 Q + C) 2 C3 Q^{-n-1} + C <= Q / 2.
inline bool localization_hypothesis(int n, double Q, const ConstructionConstants& k) {
    return (n * k.C * k.C7 * Q + k.C) * 2 * k.C3 * std::pow(Q, -(n + 1)) + k.C <= Q / 2;
}

/// Root of G = F + lambda within 2 C3 Q^{-n-1} of x0 by sign change and bisection.
/// In strict mode a failed Q hypothesis raises q_too_small; otherwise it is recorded.
inline LocalizeResult localize_root(const IntegerForm& F, const CurveSystem& curve, const InhomFunction& lambda,
                                    double x0, double Q, const ConstructionConstants& k, bool strict = true) {
    const int n = curve.n();
    LocalizeResult r;
    r.radius = 2 * k.C3 * std::pow(Q, -(n + 1));
    if (x0 - r.radius < curve.a() || x0 + r.radius > curve.b())
        throw domain_error("localize_root: x0 within 2 C3 Q^{-n-1} of the boundary of I");
    r.hypothesis = localization_hypothesis(n, Q, k);
    if (strict && !r.hypothesis) throw q_too_small("localize_root: Q too small for the localization inequality");
    EvaluatedForm G(F, curve, lambda);
    long double lo = x0 - r.radius, hi = x0 + r.radius;
    long double glo = G.operator()<long double>(0, lo), ghi = G.operator()<long double>(0, hi);
    const long double d0 = G.operator()<long double>(1, x0);
    r.sign_preserved = true;
    for (int s = 1; s <= 10; ++s) {
        long double x = lo + (hi - lo) * s / 11;
        long double d = G.operator()<long double>(1, x);
        if ((d < 0) != (d0 < 0) || d == 0) r.sign_preserved = false;
    }
    if (!((glo <= 0 && ghi >= 0) || (glo >= 0 && ghi <= 0))) {
        r.failure = "no sign change at the ends of the localization interval";
        r.lo = static_cast<double>(lo);
        r.hi = static_cast<double>(hi);
        return r;
    }
    const bool lo_neg = glo < 0;
    const long double width = 1e-15L * curve.length();
    while (hi - lo > width) {
        long double m = lo + (hi - lo) / 2;
        if (m == lo || m == hi) break;
        long double gm = G.operator()<long double>(0, m);
        if (gm == 0) {
            lo = hi = m;
            break;
        }
        if ((gm < 0) == lo_neg) lo = m; else hi = m;
    }
    r.ok = true;
    r.lo = static_cast<double>(lo);
    r.hi = static_cast<double>(hi);
    r.alpha = static_cast<double>((lo + hi) / 2);
    return r;
}

struct ConstructionTrace {
    double xi = 0, Q = 0, delta = 0;
    int n = 0;
    RhsVariant variant = RhsVariant::as_printed;
    bool exceptional = false;  ///< xi in Phi(C1 Q, delta): construction not attempted
    ShortVectors vectors;
    ConstructionConstants k{};
    double C2_apriori = 0;     ///< C1^{-n}
    RoundingResult rounding;
    // recorded inequalities
    bool eq10_ok = false;
    bool eq12_value_ok = false;
    bool eq12_derivative_ok = false;
    bool eq12_height_ok = false;
    LocalizeResult loc;
    std::int64_t height = 0;   ///< H(F) of the witness
    double distance = 0;       ///< |xi - alpha|
    bool eq8_ok = false;       ///< H <= K1 Q and |xi - alpha| <= K2 Q^{-n-1}
    bool success = false;
    bool alt_success = false;  ///< outcome with the other right-hand side variant
    std::string failure;
};

struct ConstructOptions {
    double delta = 1e-2;
    RhsVariant variant = RhsVariant::as_printed;
    ShortVectorOptions vectors;
    bool strict_hypothesis = false;
    bool run_alternative = true;
};

namespace detail {

inline void run_variant(ConstructionTrace& tr, const CurveSystem& curve, const InhomFunction& lambda,
                        RhsVariant variant, bool strict) {
    const int n = curve.n();
    const double Qn = std::pow(tr.Q, -n);
    tr.rounding = solve_rounding_system(tr.vectors.vectors, tr.xi, curve, lambda, tr.Q, variant);
    if (!tr.rounding.form) {
        tr.failure = "rounded form is zero";
        return;
    }
    const auto& F = *tr.rounding.form;
    tr.height = height(F);
    tr.eq12_value_ok = std::fabs(tr.rounding.G) <= tr.k.C3 * Qn;
    tr.eq12_derivative_ok = tr.Q <= std::fabs(tr.rounding.dG) && std::fabs(tr.rounding.dG) <= tr.k.C4 * tr.Q;
    tr.eq12_height_ok = static_cast<double>(tr.height) <= tr.k.C7 * tr.Q;
    try {
        tr.loc = localize_root(F, curve, lambda, tr.xi, tr.Q, tr.k, strict);
    } catch (const domain_error& e) {
        tr.failure = e.what();
        return;
    }
    if (!tr.loc.ok) {
        tr.failure = tr.loc.failure;
        return;
    }
    tr.distance = std::fabs(tr.xi - tr.loc.alpha);
    tr.eq8_ok = static_cast<double>(tr.height) <= tr.k.K1 * tr.Q && tr.distance <= tr.k.K2 * std::pow(tr.Q, -(n + 1));
    tr.success = tr.eq8_ok;
    if (!tr.success) tr.failure = "approximation inequality not met";
}

} // namespace detail

/// Full construction for one (xi, Q). Failures are recorded in the trace.
inline ConstructionTrace nearby_resonant(double xi, const CurveSystem& curve, const InhomFunction& lambda, double Q,
                                         const ConstructOptions& opt = {}) {
    const int n = curve.n();
    ConstructionTrace tr;
    tr.xi = xi;
    tr.Q = Q;
    tr.delta = opt.delta;
    tr.n = n;
    tr.variant = opt.variant;
    const double C1 = std::pow(opt.delta, 1.0 / (n + 1));
    tr.C2_apriori = std::pow(C1, -n);
    if (phi_contains(curve, C1 * Q, opt.delta, xi)) {
        tr.exceptional = true;
        tr.failure = "xi in Phi(C1 Q, delta)";
        return tr;
    }
    tr.vectors = independent_short_vectors({xi, Q, &curve}, opt.vectors);
    tr.k = ConstructionConstants::from(n, combined_C(curve, lambda), C1, tr.vectors.C2);
    tr.eq10_ok = true;
    for (const auto& v : tr.vectors.vectors) {
        ConvexBodyInstance body{xi, Q, &curve};
        tr.eq10_ok = tr.eq10_ok && body.gauge(v) <= tr.vectors.C2 * (1 + 1e-12);
    }
    if (opt.run_alternative) {
        ConstructionTrace alt = tr;
        const RhsVariant other = opt.variant == RhsVariant::as_printed ? RhsVariant::all_terms : RhsVariant::as_printed;
        detail::run_variant(alt, curve, lambda, other, opt.strict_hypothesis);
        tr.alt_success = alt.success;
    }
    detail::run_variant(tr, curve, lambda, opt.variant, opt.strict_hypothesis);
    return tr;
}

} // namespace inhomo
