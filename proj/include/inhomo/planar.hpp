#pragma once

#include "errors.hpp"
#include "forms.hpp"
#include "funcspace.hpp"
#include "roots.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace inhomo {

/// Shared data for planar sweeps over G(x) = a0 + a1 x + a2 f(x) + lambda(x).
class PlanarContext {
public:
    static constexpr int max_poly_degree = 11;

    PlanarContext(const CurveSystem& curve, const InhomFunction& lambda)
        : curve_(curve), lambda_(lambda) {
        if (curve.n() != 2) throw invalid_input("planar sweep requires n = 2");
        const auto& f = curve.f();
        const auto& l = lambda.smooth();
        poly_ = f.is_polynomial() && l.is_polynomial() && f.coefficients().size() <= max_poly_degree + 1 &&
                l.coefficients().size() <= max_poly_degree + 1;
        if (poly_) {
            fc_.fill(0);
            lc_.fill(0);
            for (std::size_t k = 0; k < f.coefficients().size(); ++k) fc_[k] = f.coefficients()[k];
            for (std::size_t k = 0; k < l.coefficients().size(); ++k) lc_[k] = l.coefficients()[k];
            deg_ = static_cast<int>(std::max(f.coefficients().size(), l.coefficients().size())) - 1;
            deg_ = std::max(deg_, 1);
        }
        c1_ = curve.c1();
        lam2_ = lambda.sup(2, curve.a(), curve.b(), curve.options().grid_points);
    }

    const CurveSystem& curve() const { return curve_; }
    const InhomFunction& lambda() const { return lambda_; }
    bool polynomial() const { return poly_; }
    int degree() const { return deg_; }
    long double f_coeff(int k) const { return fc_[k]; }
    long double lambda_coeff(int k) const { return lc_[k]; }
    double c1() const { return c1_; }
    double lambda2_sup() const { return lam2_; }

private:
    const CurveSystem& curve_;
    const InhomFunction& lambda_;
    bool poly_ = false;
    int deg_ = 0;
    std::array<long double, max_poly_degree + 1> fc_{}, lc_{};
    double c1_ = 0, lam2_ = 0;
};

/// P(x) = a1 x + a2 f(x) + lambda(x) for a fixed coefficient pair; G = a0 + P.
template <class Real>
class PairModel {
public:
    PairModel(const PlanarContext& ctx, std::int64_t a1, std::int64_t a2) : ctx_(ctx), a1_(a1), a2_(a2) {
        if (ctx.polynomial()) {
            deg_ = ctx.degree();
            for (int k = 0; k <= deg_; ++k)
                c_[0][k] = static_cast<Real>(static_cast<long double>(a2) * ctx.f_coeff(k) + ctx.lambda_coeff(k));
            c_[0][1] += static_cast<Real>(a1);
            while (deg_ > 0 && c_[0][deg_] == 0) --deg_;
            for (int j = 1; j <= 2; ++j)
                for (int k = 0; k + j <= deg_; ++k) c_[j][k] = c_[j - 1][k + 1] * static_cast<Real>(k + 1);
        }
    }

    std::int64_t a1() const { return a1_; }
    std::int64_t a2() const { return a2_; }
    const PlanarContext& context() const { return ctx_; }

    /// order-th derivative of P (order <= 2).
    Real eval(int order, Real x) const {
        if (ctx_.polynomial()) {
            int d = deg_ - order;
            if (d < 0) return Real(0);
            Real acc = c_[order][d];
            for (int k = d - 1; k >= 0; --k) acc = acc * x + c_[order][k];
            return acc;
        }
        Real v = static_cast<Real>(a2_) * ctx_.curve().f().template eval<Real>(order, x) +
                 ctx_.lambda().template eval<Real>(order, x);
        if (order == 0) v += static_cast<Real>(a1_) * x;
        if (order == 1) v += static_cast<Real>(a1_);
        return v;
    }

    Real P(Real x) const { return eval(0, x); }
    Real dP(Real x) const { return eval(1, x); }
    Real d2P(Real x) const { return eval(2, x); }

    /// Sorted zeros of P'' inside (lo, hi).
    std::vector<Real> inflections(Real lo, Real hi) const {
        std::vector<Real> z;
        if (ctx_.polynomial()) {
            int d = deg_ - 2;
            if (d <= 0) return z;
            if (d == 1) {
                Real r = -c_[2][0] / c_[2][1];
                if (r > lo && r < hi) z.push_back(r);
                return z;
            }
            if (d == 2) return quadratic_roots(c_[2][2], c_[2][1], c_[2][0], lo, hi);
        } else if (static_cast<double>(std::llabs(a2_)) * ctx_.c1() > ctx_.lambda2_sup()) {
            return z;
        }
        auto h = [this](Real x) { return d2P(x); };
        for (Real r : roots::scan_zeros<Real>(h, lo, hi, 64))
            if (r > lo && r < hi) z.push_back(r);
        return z;
    }

    struct Piece {
        Real p, q;      ///< P is monotone on [p, q]
        Real Pp, Pq;    ///< P(p), P(q)
        bool q_is_cut;  ///< q is an interior cut (not the end of the requested range)
    };

    /// Monotone pieces of P on [lo, hi], optionally restricted to {|P'| <= cap}.
    std::vector<Piece> pieces(Real lo, Real hi, Real cap = std::numeric_limits<Real>::infinity()) const {
        std::vector<Piece> out;
        std::vector<Real> cuts{lo};
        for (Real r : inflections(lo, hi)) cuts.push_back(r);
        cuts.push_back(hi);
        auto g = [this](Real x) { return dP(x); };
        auto dg = [this](Real x) { return d2P(x); };
        Real dprev = dP(cuts[0]);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const Real p = cuts[k], q = cuts[k + 1];
            const Real dn = dP(q);
            const Real d0 = dprev;
            dprev = dn;
            basic_interval<Real> span{p, q};
            if (std::isfinite(static_cast<double>(cap))) {
                auto iv = roots::monotone_preimage<Real>(g, dg, p, q, d0, dn, -cap, cap);
                if (!iv) continue;
                span = *iv;
            }
            // single zero of the monotone P' inside span splits it
            Real s0 = span.lo == p ? d0 : dP(span.lo);
            Real s1 = span.hi == q ? dn : dP(span.hi);
            std::vector<Real> sub{span.lo};
            if ((s0 < 0 && s1 > 0) || (s0 > 0 && s1 < 0)) {
                Real z = roots::solve_monotone<Real>(g, dg, span.lo, span.hi, s1 > s0, Real(0),
                                                     span.lo + (span.hi - span.lo) / 2);
                if (z > span.lo && z < span.hi) sub.push_back(z);
            }
            sub.push_back(span.hi);
            for (std::size_t j = 0; j + 1 < sub.size(); ++j) {
                Piece pc{sub[j], sub[j + 1], P(sub[j]), P(sub[j + 1]), true};
                out.push_back(pc);
            }
        }
        if (!out.empty()) out.back().q_is_cut = out.back().q < hi;
        for (std::size_t k = 0; k + 1 < out.size(); ++k) out[k].q_is_cut = true;
        return out;
    }

    /// Visits fn(a0, l, r) for every integer a0 in [a0_lo, a0_hi] such that
    /// {x in piece : |a0 + P(x)| < thr} is non-empty; [l, r] is its closure.
    /// thr == 0 visits roots (l == r); a root at an interior cut q is left to the next piece.
    template <class Fn>
    void solutions(const Piece& pc, Real thr, std::int64_t a0_lo, std::int64_t a0_hi, Fn&& fn) const {
        const bool inc = pc.Pq >= pc.Pp;
        const Real vlo = inc ? pc.Pp : pc.Pq, vhi = inc ? pc.Pq : pc.Pp;
        std::int64_t lo, hi;
        if (thr > 0) {
            lo = static_cast<std::int64_t>(std::floor(-vhi - thr)) + 1;
            hi = static_cast<std::int64_t>(std::ceil(-vlo + thr)) - 1;
        } else {
            lo = static_cast<std::int64_t>(std::ceil(-vhi));
            hi = static_cast<std::int64_t>(std::floor(-vlo));
        }
        lo = std::max(lo, a0_lo);
        hi = std::min(hi, a0_hi);
        if (lo > hi) return;
        auto g = [this](Real x) { return P(x); };
        auto dg = [this](Real x) { return dP(x); };
        // iterate so that the target -a0 moves from P(p) towards P(q): warm starts stay close
        const bool forward = !inc;  // increasing P: targets increase as a0 decreases
        Real guess_a = pc.p, guess_b = pc.p;
        const bool zero_pair = a1_ == 0 && a2_ == 0;
        for (std::int64_t i = 0; i <= hi - lo; ++i) {
            const std::int64_t a0 = forward ? lo + i : hi - i;
            if (zero_pair && a0 == 0) continue;  // not a form
            const Real y = static_cast<Real>(-a0);
            if (thr == 0) {
                if (pc.q_is_cut && y == pc.Pq) continue;
                Real x = (y == pc.Pp) ? pc.p
                       : (y == pc.Pq) ? pc.q
                                      : roots::solve_monotone<Real>(g, dg, pc.p, pc.q, inc, y, guess_a);
                guess_a = x;
                fn(a0, x, x);
                continue;
            }
            const Real ylo = y - thr, yhi = y + thr;
            Real xa = ylo <= vlo ? (inc ? pc.p : pc.q) : roots::solve_monotone<Real>(g, dg, pc.p, pc.q, inc, ylo, guess_a);
            Real xb = yhi >= vhi ? (inc ? pc.q : pc.p) : roots::solve_monotone<Real>(g, dg, pc.p, pc.q, inc, yhi, guess_b);
            guess_a = xa;
            guess_b = xb;
            fn(a0, std::min(xa, xb), std::max(xa, xb));
        }
    }

private:
    static std::vector<Real> quadratic_roots(Real a, Real b, Real c, Real lo, Real hi) {
        std::vector<Real> z;
        if (a == 0) {
            if (b != 0) {
                Real r = -c / b;
                if (r > lo && r < hi) z.push_back(r);
            }
            return z;
        }
        Real disc = b * b - 4 * a * c;
        if (disc < 0) return z;
        Real s = std::sqrt(disc);
        Real qq = -(b + (b >= 0 ? s : -s)) / 2;
        Real r1 = qq / a, r2 = qq != 0 ? c / qq : r1;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > lo && r1 < hi) z.push_back(r1);
        if (r2 > lo && r2 < hi && r2 != r1) z.push_back(r2);
        return z;
    }

    const PlanarContext& ctx_;
    std::int64_t a1_, a2_;
    int deg_ = 0;
    std::array<std::array<Real, PlanarContext::max_poly_degree + 1>, 3> c_{};
};

/// Visits (a1, a2) with Hlo <= max(|a1|, |a2|) <= Hhi for a fixed a2.
template <class Fn>
void for_each_a1(std::int64_t a2, std::int64_t Hlo, std::int64_t Hhi, Fn&& fn) {
    if (std::llabs(a2) > Hhi) return;
    if (std::llabs(a2) >= Hlo) {
        for (std::int64_t a1 = -Hhi; a1 <= Hhi; ++a1) fn(a1);
    } else {
        for (std::int64_t a1 = -Hhi; a1 <= -Hlo; ++a1) fn(a1);
        for (std::int64_t a1 = std::max<std::int64_t>(Hlo, 1); a1 <= Hhi; ++a1) fn(a1);
    }
}

/// Canonical sign for lambda = 0 sweeps: (a1, a2) with a2 > 0, or a2 = 0 and a1 > 0.
inline bool canonical_pair(std::int64_t a1, std::int64_t a2) { return a2 > 0 || (a2 == 0 && a1 > 0); }

/// Work estimate of a planar sweep over H(F) <= Q on I: coefficient pairs plus
/// forms that actually produce a root or solution interval (about 1.2 Q^3 |I| C).
/// The budget for sweeps is checked against this output-sensitive count rather
/// than the nominal size of F_2(Q), most of whose forms never reach the inner loop.
inline void check_sweep_budget(const CurveSystem& curve, std::int64_t Q, std::uint64_t budget, const char* what) {
    const double q = static_cast<double>(Q);
    const double est = (2 * q + 1) * (2 * q + 1) + 1.2 * q * q * q * curve.length() * std::max(1.0, curve.C());
    if (est > static_cast<double>(budget))
        throw budget_error(std::string(what) + ": sweep work exceeds budget", static_cast<std::uint64_t>(est), budget);
}

inline std::int64_t gcd3(std::int64_t a, std::int64_t b, std::int64_t c) {
    return std::gcd(std::gcd(std::llabs(a), std::llabs(b)), std::llabs(c));
}

} // namespace inhomo
