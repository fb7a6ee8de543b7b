#pragma once

#include "errors.hpp"
#include "forms.hpp"
#include "funcspace.hpp"
#include "interval_set.hpp"
#include "parallel.hpp"
#include "planar.hpp"
#include "resonant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

namespace inhomo {

struct Ball {
    double center;
    double radius;
};

/// (union of balls) ∩ J as a normalized interval set.
inline IntervalSet union_intersect_measure(const std::vector<Ball>& balls, Interval J) {
    std::vector<Interval> iv;
    iv.reserve(balls.size());
    for (const auto& b : balls) {
        if (b.radius < 0) throw domain_error("union_intersect_measure: negative radius");
        iv.push_back({b.center - b.radius, b.center + b.radius});
    }
    return IntervalSet(std::move(iv)).clip(J.lo, J.hi);
}

namespace detail {

/// LSD radix sort of doubles by their order-preserving 64-bit keys.
inline void radix_sort(std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 1024) {
        std::sort(v.begin(), v.end());
        return;
    }
    std::vector<std::uint64_t> keys(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t b;
        std::memcpy(&b, &v[i], sizeof b);
        keys[i] = (b >> 63) ? ~b : (b | (std::uint64_t{1} << 63));
    }
    std::vector<std::size_t> count(1 << 16);
    for (int shift = 0; shift < 64; shift += 16) {
        std::fill(count.begin(), count.end(), 0);
        for (auto k : keys) ++count[(k >> shift) & 0xFFFF];
        std::size_t sum = 0;
        for (auto& c : count) {
            std::size_t t = c;
            c = sum;
            sum += t;
        }
        for (auto k : keys) tmp[count[(k >> shift) & 0xFFFF]++] = k;
        keys.swap(tmp);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t k = keys[i];
        std::uint64_t b = (k >> 63) ? (k & ~(std::uint64_t{1} << 63)) : ~k;
        std::memcpy(&v[i], &b, sizeof b);
    }
}

/// Measure of (union of [c - r, c + r] over sorted centers) ∩ J.
inline double covered_measure(const std::vector<double>& sorted_centers, double r, Interval J) {
    auto first = std::lower_bound(sorted_centers.begin(), sorted_centers.end(), J.lo - r);
    double m = 0, cur_lo = 0, cur_hi = -std::numeric_limits<double>::infinity();
    bool open = false;
    for (auto it = first; it != sorted_centers.end() && *it - r <= J.hi; ++it) {
        double lo = std::max(*it - r, J.lo), hi = std::min(*it + r, J.hi);
        if (lo > hi) continue;
        if (open && lo <= cur_hi) {
            cur_hi = std::max(cur_hi, hi);
        } else {
            if (open) m += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
            open = true;
        }
    }
    if (open) m += cur_hi - cur_lo;
    return m;
}

} // namespace detail

struct UbiquityOptions {
    std::uint64_t budget = default_form_budget;
    int workers = 1;
    /// Upper bound on root centers held in memory per x-pass.
    std::size_t max_points_per_pass = 20'000'000;
};

/// Sorted centers of all resonant points with H(alpha) <= Q lying in [lo, hi].
inline std::vector<double> resonant_centers(const CurveSystem& curve, const InhomFunction& lambda, std::int64_t Q,
                                            double lo, double hi, const UbiquityOptions& opt) {
    std::vector<double> pts;
    if (curve.n() == 2) {
        PlanarContext ctx(curve, lambda);
        const bool reduced = lambda.is_zero();
        const std::int64_t first = reduced ? 0 : -Q;
        auto parts = parallel_map<std::vector<double>>(
            static_cast<std::size_t>(Q - first + 1), opt.workers, [&](std::size_t idx) {
                std::vector<double> out;
                for_each_planar_root(ctx, Q, lo, hi, reduced, first + static_cast<std::int64_t>(idx),
                                     [&](double x, std::int64_t, std::int64_t, std::int64_t) { out.push_back(x); });
                return out;
            });
        for (auto& p : parts) pts.insert(pts.end(), p.begin(), p.end());
    } else {
        ResonantOptions ro;
        ro.budget = opt.budget;
        ro.workers = opt.workers;
        for (const auto& r : enumerate_resonant(curve, lambda, Q, ro))
            if (r.alpha >= lo && r.alpha <= hi) pts.push_back(r.alpha);
    }
    detail::radix_sort(pts);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct UbiquityRecord {
    int t;
    std::int64_t Q;
    double kappa;
    double radius;  ///< kappa * 2^{-t(n+1)}
    Interval J;
    double covered;
    double ratio;
};

struct UbiquityReport {
    double kappa;
    int calibration_t;
    std::vector<UbiquityRecord> records;
    std::vector<double> min_ratio_per_J;  ///< liminf proxy per test interval
    double min_ratio;                     ///< liminf proxy over all J (min over the tested t)
    double rho_step_ratio;                ///< rho(2^{t+1}) / rho(2^t) = 2^{-(n+1)}
    bool rho_regular;                     ///< rho_step_ratio < 1
};

/// Coverage of J by the union of balls B(alpha, radius) over alpha with H(alpha) <= 2^t.
/// Computed in x-passes so that only the centers of one pass are held at a time.
inline std::vector<double> coverage_for_t(const CurveSystem& curve, const InhomFunction& lambda, int t,
                                          double radius, const std::vector<Interval>& J_list,
                                          const UbiquityOptions& opt) {
    const std::int64_t Q = std::int64_t{1} << t;
    if (curve.n() == 2) check_sweep_budget(curve, Q, opt.budget, "coverage_sweep");
    const double est = 1.2 * std::pow(static_cast<double>(Q), curve.n() + 1) * curve.length() *
                       (lambda.is_zero() ? 0.5 : 1.0);
    const int passes = std::max(1, static_cast<int>(std::ceil(est / static_cast<double>(opt.max_points_per_pass))));
    std::vector<double> covered(J_list.size(), 0.0);
    for (int p = 0; p < passes; ++p) {
        const double wl = curve.a() + curve.length() * p / passes;
        const double wh = p + 1 == passes ? curve.b() : curve.a() + curve.length() * (p + 1) / passes;
        auto centers = resonant_centers(curve, lambda, Q, std::max(curve.a(), wl - radius),
                                        std::min(curve.b(), wh + radius), opt);
        for (std::size_t j = 0; j < J_list.size(); ++j) {
            Interval Jw{std::max(J_list[j].lo, wl), std::min(J_list[j].hi, wh)};
            if (Jw.lo >= Jw.hi) continue;
            covered[j] += detail::covered_measure(centers, radius, Jw);
        }
    }
    return covered;
}

/// kappa with coverage ratio `target` on I at t: bisection in log kappa.
inline double calibrate_kappa(const CurveSystem& curve, const InhomFunction& lambda, int t, double target,
                              const UbiquityOptions& opt = {}) {
    if (!(target > 0 && target < 1)) throw domain_error("calibrate_kappa: target must lie in (0, 1)");
    const std::int64_t Q = std::int64_t{1} << t;
    const auto centers = resonant_centers(curve, lambda, Q, curve.a(), curve.b(), opt);
    if (centers.empty()) throw domain_error("calibrate_kappa: no resonant points");
    const double scale = std::pow(static_cast<double>(Q), -(curve.n() + 1));
    const Interval I{curve.a(), curve.b()};
    auto ratio = [&](double kappa) { return detail::covered_measure(centers, kappa * scale, I) / curve.length(); };
    double lo = 1e-6, hi = 1.0;
    while (ratio(hi) < target) hi *= 2;
    while (ratio(lo) > target) lo /= 2;
    for (int it = 0; it < 100; ++it) {
        double mid = std::sqrt(lo * hi);
        if (ratio(mid) < target) lo = mid; else hi = mid;
    }
    return hi;
}

/// Coverage ratios for t in t_range on each J with frozen kappa.
inline UbiquityReport coverage_sweep(const CurveSystem& curve, const InhomFunction& lambda,
                                     const std::vector<int>& t_range, const std::vector<Interval>& J_list,
                                     double kappa, const UbiquityOptions& opt = {}) {
    if (t_range.empty()) throw domain_error("coverage_sweep: empty t range");
    if (!(kappa > 0)) throw domain_error("coverage_sweep: kappa must be positive");
    for (const auto& J : J_list)
        if (!(J.lo >= curve.a() && J.hi <= curve.b() && J.hi > J.lo)) throw domain_error("coverage_sweep: J must lie in I");
    const int n = curve.n();
    UbiquityReport rep;
    rep.kappa = kappa;
    rep.calibration_t = t_range.front();
    rep.min_ratio_per_J.assign(J_list.size(), 1.0);
    rep.min_ratio = 1.0;
    rep.rho_step_ratio = std::pow(2.0, -(n + 1));
    rep.rho_regular = rep.rho_step_ratio < 1;
    for (int t : t_range) {
        const double radius = kappa * std::ldexp(1.0, -t * (n + 1));
        const auto cov = coverage_for_t(curve, lambda, t, radius, J_list, opt);
        for (std::size_t j = 0; j < J_list.size(); ++j) {
            const double ratio = std::clamp(cov[j] / (J_list[j].hi - J_list[j].lo), 0.0, 1.0);
            rep.records.push_back({t, std::int64_t{1} << t, kappa, radius, J_list[j], cov[j], ratio});
            rep.min_ratio_per_J[j] = std::min(rep.min_ratio_per_J[j], ratio);
            rep.min_ratio = std::min(rep.min_ratio, ratio);
        }
    }
    return rep;
}

enum class Verdict { divergent, convergent, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::divergent: return "divergent";
        case Verdict::convergent: return "convergent";
        default: return "inconclusive";
    }
}

struct DivergenceResult {
    Verdict verdict;            ///< exact threshold for power laws, growth-ratio test otherwise
    Verdict empirical;          ///< growth-ratio test on dyadic block sums
    bool has_exact;
    double threshold;           ///< (n+1)/(v+1) for power laws
    double growth_ratio;        ///< last dyadic block sum / previous one
    std::vector<double> checkpoints;    ///< q = 2^k
    std::vector<double> partial_sums;   ///< S(q) at the checkpoints
};

/// Partial sums of sum_q (psi(q)/q)^s q^n and the divergence classification.
inline DivergenceResult divergence_diagnostic(const ApproxFunction& psi, double s, int n, double q_max) {
    if (!(s > 0 && s <= 1)) throw domain_error("divergence_diagnostic: s must lie in (0, 1]");
    if (!(q_max >= 1024)) throw domain_error("divergence_diagnostic: q_max must be >= 2^10");
    DivergenceResult r{};
    const int K = static_cast<int>(std::floor(std::log2(q_max)));
    long double S = 0, block = 0, prev_block = 0;
    for (int k = 0; k <= K; ++k) {
        const auto q_lo = static_cast<std::uint64_t>(1) << (k == 0 ? 0 : k - 1);
        const auto q_hi = static_cast<std::uint64_t>(1) << k;
        block = 0;
        for (std::uint64_t q = (k == 0 ? 1 : q_lo + 1); q <= q_hi; ++q) {
            const long double qq = static_cast<long double>(q);
            block += std::pow(static_cast<long double>(psi(static_cast<double>(q))) / qq, static_cast<long double>(s)) *
                     std::pow(qq, static_cast<long double>(n));
        }
        S += block;
        r.checkpoints.push_back(static_cast<double>(q_hi));
        r.partial_sums.push_back(static_cast<double>(S));
        if (k == K - 1) prev_block = block;
    }
    r.growth_ratio = static_cast<double>(block / prev_block);
    r.empirical = r.growth_ratio >= 1 - 1e-4 ? Verdict::divergent
                : r.growth_ratio < 1 - 1e-3   ? Verdict::convergent
                                              : Verdict::inconclusive;
    if (psi.is_power()) {
        r.has_exact = true;
        r.threshold = (n + 1) / (psi.exponent() + 1);
        r.verdict = s <= r.threshold * (1 + 1e-12) ? Verdict::divergent : Verdict::convergent;
    } else {
        r.has_exact = false;
        r.threshold = std::numeric_limits<double>::quiet_NaN();
        r.verdict = r.empirical;
    }
    return r;
}

} // namespace inhomo
