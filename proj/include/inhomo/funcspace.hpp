#pragma once

#include "errors.hpp"
#include "interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace inhomo {

/// A real function on an interval together with its derivatives.
///
/// Either a polynomial (all derivatives exact, evaluated by Horner in the
/// caller's precision) or a closure list {g, g', g'', ...} supplied by the user.
class Smooth {
public:
    using closure_type = std::function<long double(long double)>;

    Smooth() : dcoef_{{0.0L}} {}

    /// c[0] + c[1] x + c[2] x^2 + ...
    static Smooth polynomial(std::vector<long double> coeffs, std::string label = {}) {
        Smooth s;
        while (coeffs.size() > 1 && coeffs.back() == 0.0L) coeffs.pop_back();
        if (coeffs.empty()) coeffs.push_back(0.0L);
        s.poly_ = true;
        s.label_ = std::move(label);
        s.dcoef_.assign(1, std::move(coeffs));
        while (s.dcoef_.back().size() > 1) {
            const auto& c = s.dcoef_.back();
            std::vector<long double> d(c.size() - 1);
            for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = c[k] * static_cast<long double>(k);
            s.dcoef_.push_back(std::move(d));
        }
        return s;
    }

    /// derivs[j] evaluates the j-th derivative; all orders needed downstream must be present.
    static Smooth closure(std::vector<closure_type> derivs, std::string label = {}) {
        if (derivs.empty()) throw invalid_input("closure needs at least the function itself");
        Smooth s;
        s.poly_ = false;
        s.label_ = std::move(label);
        s.fns_ = std::make_shared<const std::vector<closure_type>>(std::move(derivs));
        return s;
    }

    bool is_polynomial() const { return poly_; }
    const std::vector<long double>& coefficients() const { return dcoef_.front(); }
    const std::string& label() const { return label_; }

    /// Highest derivative order available (polynomials: unlimited).
    int max_order() const {
        return poly_ ? std::numeric_limits<int>::max() : static_cast<int>(fns_->size()) - 1;
    }

    bool is_zero() const { return poly_ && dcoef_.front().size() == 1 && dcoef_.front()[0] == 0.0L; }

    template <class Real = double>
    Real eval(int order, Real x) const {
        if (poly_) {
            if (order >= static_cast<int>(dcoef_.size())) return Real(0);
            const auto& c = dcoef_[order];
            Real acc = static_cast<Real>(c.back());
            for (std::size_t k = c.size() - 1; k-- > 0;) acc = acc * x + static_cast<Real>(c[k]);
            return acc;
        }
        if (order > max_order())
            throw domain_error("derivative order " + std::to_string(order) + " not supplied for " + label_);
        return static_cast<Real>((*fns_)[order](static_cast<long double>(x)));
    }

    template <class Real = double>
    Real operator()(Real x) const { return eval<Real>(0, x); }

private:
    bool poly_ = true;
    std::string label_;
    std::vector<std::vector<long double>> dcoef_;
    std::shared_ptr<const std::vector<closure_type>> fns_;
};

namespace detail {

inline std::vector<double> grid(double a, double b, int points) {
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k)
        g[k] = (k == points - 1) ? b : a + (b - a) * static_cast<double>(k) / (points - 1);
    return g;
}

/// Richardson-extrapolated central difference of g at x (two step sizes).
inline long double richardson_derivative(const Smooth& s, int order, long double x, long double h) {
    auto d = [&](long double step) {
        return (s.eval<long double>(order, x + step) - s.eval<long double>(order, x - step)) / (2 * step);
    };
    return (4 * d(h / 2) - d(h)) / 3;
}

/// Rejects closures whose supplied derivatives disagree with differences of the lower order.
inline void check_closure_derivatives(const Smooth& s, int up_to, double a, double b, int points) {
    if (s.is_polynomial()) return;
    if (s.max_order() < up_to)
        throw invalid_input("closure '" + s.label() + "' supplies derivatives only to order " +
                            std::to_string(s.max_order()) + ", need " + std::to_string(up_to));
    const long double h = 1e-3L * (b - a);
    const int probes = std::min(points, 200);
    for (int j = 0; j < up_to; ++j) {
        for (double x : grid(a + 2 * static_cast<double>(h), b - 2 * static_cast<double>(h), probes)) {
            long double supplied = s.eval<long double>(j + 1, x);
            long double numeric = richardson_derivative(s, j, x, h);
            long double scale = std::max<long double>(1.0L, std::fabs(supplied));
            if (std::fabs(supplied - numeric) > 1e-6L * scale)
                throw invalid_input("closure '" + s.label() + "': derivative of order " + std::to_string(j + 1) +
                                    " disagrees with finite differences at x=" + std::to_string(x));
        }
    }
}

inline double grid_sup(const Smooth& s, int order, double a, double b, int points) {
    double m = 0;
    for (double x : grid(a, b, points)) m = std::max(m, std::fabs(s.eval<double>(order, x)));
    return m;
}

} // namespace detail

/// Approximation function psi: positive and non-increasing.
class ApproxFunction {
public:
    static ApproxFunction power(double v) {
        if (!(v > 0)) throw invalid_input("power-law exponent must be positive");
        ApproxFunction p;
        p.v_ = v;
        p.fn_ = [v](double q) { return std::pow(q, -v); };
        return p;
    }

    /// Tabulated/closure psi; monotonicity is certified on the geometric probe grid [probe_lo, probe_hi].
    static ApproxFunction closure(std::function<double(double)> fn, double probe_lo = 1.0, double probe_hi = 1 << 20) {
        ApproxFunction p;
        p.fn_ = std::move(fn);
        p.probe_lo_ = probe_lo;
        p.probe_hi_ = probe_hi;
        double prev = std::numeric_limits<double>::infinity();
        for (double q = probe_lo; q <= probe_hi; q *= std::sqrt(2.0)) {
            double y = p.fn_(q);
            if (!(y > 0)) throw invalid_input("psi must be positive (psi(" + std::to_string(q) + ") <= 0)");
            if (y > prev) throw invalid_input("psi must be non-increasing on the probe grid");
            prev = y;
        }
        return p;
    }

    double operator()(double q) const { return fn_(q); }
    bool is_power() const { return v_ > 0; }
    /// Exponent v of a power law; 0 for closures.
    double exponent() const { return v_; }
    double probe_lo() const { return probe_lo_; }
    double probe_hi() const { return probe_hi_; }

private:
    ApproxFunction() = default;
    std::function<double(double)> fn_;
    double v_ = 0;
    double probe_lo_ = 1.0;
    double probe_hi_ = 1 << 20;
};

struct OrderEstimate {
    double value;
    bool exact;       ///< true for power laws
    double probe_lo;  ///< grid used for the estimate (empty range when exact)
    double probe_hi;
};

/// Lower order of 1/psi. Exact v for power laws; otherwise the minimum of
/// -log psi(q) / log q over q = 2^k, 16 <= q <= q_max.
inline OrderEstimate lower_order(const ApproxFunction& psi, double q_max) {
    if (!(q_max >= 16)) throw domain_error("lower_order: q_max must be >= 16");
    if (psi.is_power()) return {psi.exponent(), true, 0, 0};
    double best = std::numeric_limits<double>::infinity();
    double q = 16;
    for (; q <= q_max; q *= 2) {
        double y = psi(q);
        if (!(y > 0)) throw invalid_input("psi sample is not positive");
        best = std::min(best, -std::log(y) / std::log(q));
    }
    return {best, false, 16, q / 2};
}

/// The inhomogeneous shift lambda with derivatives up to order 2.
class InhomFunction {
public:
    InhomFunction() : InhomFunction(Smooth::polynomial({0.0L}, "zero")) {}
    explicit InhomFunction(Smooth s) : s_(std::move(s)) {}

    static InhomFunction zero() { return InhomFunction(Smooth::polynomial({0.0L}, "zero")); }
    static InhomFunction constant(double c) {
        return InhomFunction(Smooth::polynomial({static_cast<long double>(c)}, "constant"));
    }
    static InhomFunction power(int k) {
        std::vector<long double> c(k + 1, 0.0L);
        c[k] = 1.0L;
        return InhomFunction(Smooth::polynomial(std::move(c), "x^" + std::to_string(k)));
    }

    const Smooth& smooth() const { return s_; }
    bool is_zero() const { return s_.is_zero(); }
    const std::string& label() const { return s_.label(); }

    template <class Real = double>
    Real eval(int order, Real x) const { return s_.eval<Real>(order, x); }

    /// sup |lambda^{(k)}| on [a,b] over a certification grid.
    double sup(int k, double a, double b, int points = 10000) const {
        return detail::grid_sup(s_, k, a, b, points);
    }

private:
    Smooth s_;
};

struct CurveOptions {
    int grid_points = 10000;
    /// Floor below which |Wronskian| marks a bad subinterval.
    double wronskian_floor = 1e-8;
};

/// The curve x -> (f_1(x), ..., f_n(x)) on I = [a, b] with f_1(x) = x.
class CurveSystem {
public:
    CurveSystem(std::string name, double a, double b, std::vector<Smooth> comps, CurveOptions opt = {})
        : name_(std::move(name)), a_(a), b_(b), comps_(std::move(comps)), opt_(opt) {
        if (comps_.empty()) throw invalid_input("curve needs at least one component");
        if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) throw invalid_input("domain must be finite with b > a");
        if (opt_.grid_points < 2) throw invalid_input("certification grid needs >= 2 points");
        if (!is_identity(comps_.front()))
            throw invalid_input("first component must be f_1(x) = x; use reparameterize()");
        const int need = std::max(n(), 2);
        for (const auto& c : comps_) detail::check_closure_derivatives(c, need, a_, b_, opt_.grid_points);
        compute_bounds();
    }

    const std::string& name() const { return name_; }
    int n() const { return static_cast<int>(comps_.size()); }
    double a() const { return a_; }
    double b() const { return b_; }
    double length() const { return b_ - a_; }
    const CurveOptions& options() const { return opt_; }

    /// Component f_i, 1 <= i <= n.
    const Smooth& component(int i) const { return comps_.at(i - 1); }
    /// The planar curve's f (= f_2) when n = 2.
    const Smooth& f() const { return comps_.at(1); }

    template <class Real = double>
    Real eval(int i, int j, Real x) const { return comps_[i - 1].template eval<Real>(j, x); }

    /// C = sup |f_i^{(j)}| over 1 <= i <= n, 0 <= j <= max(n, 2).
    double C() const { return C_; }
    /// sup_I |f_i|.
    double sup_abs(int i) const { return sup0_.at(i - 1); }
    /// Curvature bounds c1 <= |f''| <= c2 (n = 2 only; 0 otherwise).
    double c1() const { return c1_; }
    double c2() const { return c2_; }

    bool contains(double x) const { return x >= a_ && x <= b_; }

private:
    static bool is_identity(const Smooth& s) {
        if (s.is_polynomial()) {
            const auto& c = s.coefficients();
            return c.size() == 2 && c[0] == 0.0L && c[1] == 1.0L;
        }
        return false;
    }

    void compute_bounds() {
        const int jmax = std::max(n(), 2);
        C_ = 0;
        sup0_.clear();
        for (const auto& c : comps_) {
            sup0_.push_back(detail::grid_sup(c, 0, a_, b_, opt_.grid_points));
            for (int j = 0; j <= jmax; ++j) C_ = std::max(C_, detail::grid_sup(c, j, a_, b_, opt_.grid_points));
        }
        if (n() == 2) {
            c1_ = std::numeric_limits<double>::infinity();
            c2_ = 0;
            for (double x : detail::grid(a_, b_, opt_.grid_points)) {
                double d2 = std::fabs(f().eval<double>(2, x));
                c1_ = std::min(c1_, d2);
                c2_ = std::max(c2_, d2);
            }
        }
    }

    std::string name_;
    double a_, b_;
    std::vector<Smooth> comps_;
    CurveOptions opt_;
    double C_ = 0;
    std::vector<double> sup0_;
    double c1_ = 0, c2_ = 0;

    friend CurveSystem reparameterize(std::string, const std::vector<Smooth>&, double, double, CurveOptions);
};

/// Re-parameterizes g = (g_1, ..., g_n) with g_1 strictly monotone on [a, b] by
/// y = g_1(x): returns the curve y -> (y, g_2(h(y)), ..., g_n(h(y))), h = g_1^{-1},
/// on g_1([a, b]). Derivatives follow from the chain rule up to order 3 (n <= 3).
inline CurveSystem reparameterize(std::string name, const std::vector<Smooth>& g, double a, double b,
                                  CurveOptions opt = {}) {
    const int n = static_cast<int>(g.size());
    if (n < 1 || n > 3) throw invalid_input("reparameterize supports 1 <= n <= 3");
    const int need = std::max(n, 2);
    for (const auto& c : g) detail::check_closure_derivatives(c, std::max(need, 3), a, b, opt.grid_points);
    const Smooth g1 = g.front();
    double lo_d = std::numeric_limits<double>::infinity(), hi_d = -lo_d;
    for (double x : detail::grid(a, b, opt.grid_points)) {
        double d = g1.eval<double>(1, x);
        lo_d = std::min(lo_d, d);
        hi_d = std::max(hi_d, d);
    }
    if (!(lo_d > 0 || hi_d < 0)) throw invalid_input("reparameterize: g_1 must be strictly monotone");
    const bool inc = lo_d > 0;
    const long double ya = g1.eval<long double>(0, a), yb = g1.eval<long double>(0, b);
    auto inverse = [g1, a, b, inc](long double y) {
        long double lo = a, hi = b;
        for (int it = 0; it < 200 && hi - lo > 0; ++it) {
            long double mid = (lo + hi) / 2;
            if (mid == lo || mid == hi) break;
            bool below = g1.eval<long double>(0, mid) < y;
            if (below == inc) lo = mid; else hi = mid;
        }
        return (lo + hi) / 2;
    };
    std::vector<Smooth> comps;
    comps.push_back(Smooth::polynomial({0.0L, 1.0L}, "identity"));
    for (int i = 1; i < n; ++i) {
        const Smooth gi = g[i];
        auto deriv = [gi, g1, inverse](int order) {
            return [gi, g1, inverse, order](long double y) -> long double {
                long double x = inverse(y);
                long double p1 = g1.eval<long double>(1, x), p2 = g1.eval<long double>(2, x),
                            p3 = g1.eval<long double>(3, x);
                long double h1 = 1 / p1;
                long double h2 = -p2 * h1 * h1 * h1;
                long double h3 = (3 * p2 * p2 - p1 * p3) / (p1 * p1 * p1 * p1 * p1);
                long double q1 = gi.eval<long double>(1, x), q2 = gi.eval<long double>(2, x),
                            q3 = gi.eval<long double>(3, x);
                switch (order) {
                    case 0: return gi.eval<long double>(0, x);
                    case 1: return q1 * h1;
                    case 2: return q2 * h1 * h1 + q1 * h2;
                    default: return q3 * h1 * h1 * h1 + 3 * q2 * h1 * h2 + q1 * h3;
                }
            };
        };
        comps.push_back(Smooth::closure({deriv(0), deriv(1), deriv(2), deriv(3)}, gi.label() + "∘g1^-1"));
    }
    double na = static_cast<double>(std::min(ya, yb)), nb = static_cast<double>(std::max(ya, yb));
    return CurveSystem(std::move(name), na, nb, std::move(comps), opt);
}

/// Determinant of (f_i^{(j)}(x)), 1 <= i, j <= n.
inline double wronskian(const CurveSystem& curve, double x) {
    if (!curve.contains(x)) throw domain_error("wronskian: x outside I");
    const int n = curve.n();
    std::vector<long double> m(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i * n + j] = curve.eval<long double>(i + 1, j + 1, x);
    long double det = 1;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(m[r * n + c]) > std::fabs(m[piv * n + c])) piv = r;
        if (m[piv * n + c] == 0) return 0.0;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(m[c * n + k], m[piv * n + k]);
            det = -det;
        }
        det *= m[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            long double fct = m[r * n + c] / m[c * n + c];
            for (int k = c; k < n; ++k) m[r * n + k] -= fct * m[c * n + k];
        }
    }
    return static_cast<double>(det);
}

struct NondegeneracyReport {
    double min_abs_wronskian;
    double argmin;
    int grid_points;
    double floor;
    /// Grid neighbourhoods of points where |W| < floor.
    IntervalSet bad;
};

inline NondegeneracyReport certify_nondegenerate(const CurveSystem& curve, int grid_points) {
    if (grid_points < 2) throw domain_error("certify_nondegenerate: grid_points must be >= 2");
    const auto g = detail::grid(curve.a(), curve.b(), grid_points);
    NondegeneracyReport rep{std::numeric_limits<double>::infinity(), curve.a(), grid_points,
                            curve.options().wronskian_floor, {}};
    std::vector<Interval> bad;
    for (int k = 0; k < grid_points; ++k) {
        double w = std::fabs(wronskian(curve, g[k]));
        if (w < rep.min_abs_wronskian) {
            rep.min_abs_wronskian = w;
            rep.argmin = g[k];
        }
        if (w < rep.floor) bad.push_back({g[std::max(k - 1, 0)], g[std::min(k + 1, grid_points - 1)]});
    }
    rep.bad = IntervalSet(std::move(bad));
    return rep;
}

namespace curves {

/// (x, x^2, ..., x^n) on [a, b].
inline CurveSystem veronese(int n, double a = 0.0, double b = 1.0, CurveOptions opt = {}) {
    if (n < 1) throw invalid_input("veronese: n >= 1");
    std::vector<Smooth> comps;
    for (int i = 1; i <= n; ++i) {
        std::vector<long double> c(i + 1, 0.0L);
        c[i] = 1.0L;
        comps.push_back(Smooth::polynomial(std::move(c), "x^" + std::to_string(i)));
    }
    return CurveSystem("veronese" + std::to_string(n), a, b, std::move(comps), opt);
}

/// (x, x^2): the planar parabola.
inline CurveSystem parabola(double a = 0.0, double b = 1.0, CurveOptions opt = {}) {
    auto c = veronese(2, a, b, opt);
    return CurveSystem("parabola", a, b, {c.component(1), c.component(2)}, opt);
}

/// (x, x^3).
inline CurveSystem cubic(double a = 0.0, double b = 1.0, CurveOptions opt = {}) {
    return CurveSystem("cubic", a, b,
                       {Smooth::polynomial({0.0L, 1.0L}, "x"), Smooth::polynomial({0, 0, 0, 1.0L}, "x^3")}, opt);
}

/// (x, sin x).
inline CurveSystem sine(double a = 0.0, double b = 1.0, CurveOptions opt = {}) {
    using std::sin, std::cos;
    auto s = Smooth::closure({[](long double x) { return sinl(x); }, [](long double x) { return cosl(x); },
                              [](long double x) { return -sinl(x); }, [](long double x) { return -cosl(x); }},
                             "sin");
    return CurveSystem("sine", a, b, {Smooth::polynomial({0.0L, 1.0L}, "x"), s}, opt);
}

/// (x, e^x).
inline CurveSystem exponential(double a = 0.0, double b = 1.0, CurveOptions opt = {}) {
    auto e = [](long double x) { return expl(x); };
    auto s = Smooth::closure({e, e, e, e}, "exp");
    return CurveSystem("exp", a, b, {Smooth::polynomial({0.0L, 1.0L}, "x"), s}, opt);
}

} // namespace curves

} // namespace inhomo
