#pragma once

#include "counting.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "funcspace.hpp"
#include "interval_set.hpp"
#include "lattice.hpp"
#include "parallel.hpp"
#include "planar.hpp"
#include "roots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace inhomo {

/// 3 / (v + 1)
inline double dimension_target(double v) { return 3.0 / (v + 1.0); }
/// (n + 1) / (v + 1)
inline double lower_bound_target(int n, double v) { return (n + 1.0) / (v + 1.0); }

/// Splits [H_lo, H_hi] at powers of two.
inline std::vector<std::pair<std::int64_t, std::int64_t>> dyadic_windows(std::int64_t H_lo, std::int64_t H_hi) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    std::int64_t lo = std::max<std::int64_t>(H_lo, 1);
    while (lo <= H_hi) {
        std::int64_t p = 1;
        while (p <= lo) p <<= 1;  // next power of two above lo
        const std::int64_t hi = std::min(H_hi, p - 1);
        out.push_back({lo, hi});
        lo = hi + 1;
    }
    return out;
}

namespace detail {

/// Solution intervals of one planar pair, grouped by a0 and merged across piece cuts.
/// emit(a0, intervals) is called in ascending a0.
template <class Real, class Emit>
void pair_solution_sets(const PairModel<Real>& m, Real lo, Real hi, Real thr, std::int64_t B0, Real cap, Emit&& emit) {
    std::vector<std::pair<std::int64_t, basic_interval<Real>>> raw;
    for (const auto& pc : m.pieces(lo, hi, cap))
        m.solutions(pc, thr, -B0, B0, [&](std::int64_t a0, Real l, Real r) { raw.push_back({a0, {l, r}}); });
    if (raw.empty()) return;
    std::sort(raw.begin(), raw.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first < y.first : x.second.lo < y.second.lo;
    });
    std::vector<basic_interval<Real>> cur;
    std::int64_t a0 = raw.front().first;
    for (const auto& [b0, iv] : raw) {
        if (b0 != a0) {
            emit(a0, cur);
            cur.clear();
            a0 = b0;
        }
        if (!cur.empty() && iv.lo <= cur.back().hi) cur.back().hi = std::max(cur.back().hi, iv.hi);
        else cur.push_back(iv);
    }
    emit(a0, cur);
}

} // namespace detail

/// {x in I : |G(x)| < H^{-v}} for G = F + lambda, computed on monotone pieces of G.
/// Intervals are returned closed; endpoints solve |G| = H^{-v}.
inline IntervalSet solution_intervals(const IntegerForm& F, const CurveSystem& curve, const InhomFunction& lambda,
                                      double v, int scan_grid = 2048) {
    if (!(v > 2)) throw domain_error("solution_intervals: v must exceed 2");
    const std::int64_t H = height(F);
    if (H < 1) throw domain_error("solution_intervals: H(F) must be >= 1");
    const double thr = std::pow(static_cast<double>(H), -v);
    if (curve.n() == 2) {
        PlanarContext ctx(curve, lambda);
        PairModel<double> m(ctx, F[1], F[2]);
        std::vector<Interval> out;
        for (const auto& pc : m.pieces(curve.a(), curve.b()))
            m.solutions(pc, thr, F[0], F[0], [&](std::int64_t, double l, double r) { out.push_back({l, r}); });
        return IntervalSet(std::move(out));
    }
    EvaluatedForm G(F, curve, lambda);
    auto g = [&](double x) { return G(0, x); };
    auto dg = [&](double x) { return G(1, x); };
    auto crit = roots::scan_zeros<double>(dg, curve.a(), curve.b(), scan_grid);
    return roots::sublevel_abs<double>(g, dg, curve.a(), curve.b(), thr, crit);
}

// ---------------------------------------------------------------- stages

struct StageForm {
    std::int64_t a0, a1, a2;
    std::int64_t H;
    std::vector<Interval> intervals;
};

struct StageOptions {
    std::uint64_t budget = default_form_budget;
    int workers = 1;
    bool keep_forms = true;
    bool keep_union = true;
    /// Keep only the part of each solution set where |G'| <= H^cap_exponent; NaN keeps everything.
    double cap_exponent = std::numeric_limits<double>::quiet_NaN();
};

/// Solution intervals of all planar forms with H_lo <= H(F) <= H_hi.
struct SolutionStage {
    const CurveSystem* curve = nullptr;
    const InhomFunction* lambda = nullptr;
    double v = 0;
    int t = 0;  ///< 0 when the height window is not dyadic
    std::int64_t H_lo = 0, H_hi = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> windows;
    double cap_exponent = std::numeric_limits<double>::quiet_NaN();
    std::vector<StageForm> forms;  ///< ordered by (a2, a1, a0)
    IntervalSet uni;
    std::uint64_t form_count = 0;
    std::uint64_t interval_count = 0;
    double total_length = 0;  ///< sum of interval lengths (with multiplicity)

    bool capped() const { return !std::isnan(cap_exponent); }
};

inline SolutionStage build_stage_range(const CurveSystem& curve, const InhomFunction& lambda, double v,
                                       std::int64_t H_lo, std::int64_t H_hi, const StageOptions& opt = {}) {
    if (curve.n() != 2) throw invalid_input("build_stage: planar curves only (n = 2)");
    if (!(v > 2)) throw domain_error("build_stage: v must exceed 2");
    if (H_lo < 1 || H_hi < H_lo) throw domain_error("build_stage: need 1 <= H_lo <= H_hi");
    check_sweep_budget(curve, H_hi, opt.budget, "build_stage");
    PlanarContext ctx(curve, lambda);
    const std::int64_t B0 = a0_bound(curve, lambda, H_hi);
    const bool capped = !std::isnan(opt.cap_exponent);

    struct Part {
        std::vector<StageForm> forms;
        std::vector<Interval> all;
        std::uint64_t nforms = 0, nint = 0;
        double len = 0;
    };
    auto parts = parallel_map<Part>(static_cast<std::size_t>(2 * H_hi + 1), opt.workers, [&](std::size_t idx) {
        const std::int64_t a2 = static_cast<std::int64_t>(idx) - H_hi;
        Part p;
        for_each_a1(a2, H_lo, H_hi, [&](std::int64_t a1) {
            const std::int64_t H = std::max(std::llabs(a1), std::llabs(a2));
            const double Hd = static_cast<double>(H);
            const double thr = std::pow(Hd, -v);
            const double cap = capped ? std::pow(Hd, opt.cap_exponent) : std::numeric_limits<double>::infinity();
            PairModel<double> m(ctx, a1, a2);
            detail::pair_solution_sets<double>(m, curve.a(), curve.b(), thr, B0, cap,
                                               [&](std::int64_t a0, const std::vector<Interval>& ivs) {
                                                   ++p.nforms;
                                                   p.nint += ivs.size();
                                                   for (const auto& iv : ivs) p.len += iv.length();
                                                   if (opt.keep_union) p.all.insert(p.all.end(), ivs.begin(), ivs.end());
                                                   if (opt.keep_forms) p.forms.push_back({a0, a1, a2, H, ivs});
                                               });
        });
        if (opt.keep_union) p.all = IntervalSet(std::move(p.all)).intervals();
        return p;
    });

    SolutionStage st;
    st.curve = &curve;
    st.lambda = &lambda;
    st.v = v;
    st.H_lo = H_lo;
    st.H_hi = H_hi;
    st.windows = dyadic_windows(H_lo, H_hi);
    if (st.windows.size() == 1 && (H_lo & (H_lo - 1)) == 0 && H_hi == 2 * H_lo - 1) {
        int t = 0;
        while ((std::int64_t{1} << t) < H_lo) ++t;
        st.t = t + 1;
    }
    st.cap_exponent = opt.cap_exponent;
    std::vector<Interval> all;
    for (auto& p : parts) {
        st.form_count += p.nforms;
        st.interval_count += p.nint;
        st.total_length += p.len;
        if (opt.keep_forms)
            for (auto& f : p.forms) st.forms.push_back(std::move(f));
        if (opt.keep_union) all.insert(all.end(), p.all.begin(), p.all.end());
    }
    if (opt.keep_union) st.uni = IntervalSet(std::move(all));
    return st;
}

/// The stage keeps pointers to curve and lambda; temporaries would dangle.
SolutionStage build_stage(const CurveSystem&, InhomFunction&&, double, int, const StageOptions& = {}) = delete;

/// Stage t: forms with 2^{t-1} <= H(F) < 2^t.
inline SolutionStage build_stage(const CurveSystem& curve, const InhomFunction& lambda, double v, int t,
                                 const StageOptions& opt = {}) {
    if (t < 2 || t > 30) throw domain_error("build_stage: t must lie in [2, 30]");
    auto st = build_stage_range(curve, lambda, v, std::int64_t{1} << (t - 1), (std::int64_t{1} << t) - 1, opt);
    st.t = t;
    return st;
}

// ---------------------------------------------------------------- classification

/// delta_1 = epsilon, delta_{i+1} = k delta_i with k = (v+1)/3; `deltas` holds every
/// delta_i <= 1 and `next` is the first value above 1.
struct DeltaLadder {
    double epsilon = 0, k = 0;
    std::vector<double> deltas;
    double next = 0;
};

inline DeltaLadder delta_ladder(double v, double epsilon) {
    if (!(v > 2)) throw domain_error("delta_ladder: v must exceed 2 (so that k > 1)");
    if (!(epsilon > 0)) throw domain_error("delta_ladder: epsilon must be positive");
    DeltaLadder L;
    L.epsilon = epsilon;
    L.k = (v + 1) / 3;
    double d = epsilon;
    while (d <= 1) {
        L.deltas.push_back(d);
        d *= L.k;
    }
    L.next = d;
    return L;
}

enum class FormClass { A1 = 1, A2 = 2, A3 = 3 };

inline const char* to_string(FormClass c) {
    switch (c) {
    case FormClass::A1: return "A1";
    case FormClass::A2: return "A2";
    case FormClass::A3: return "A3";
    }
    return "?";
}

struct ClassPiece {
    FormClass cls;
    int stratum;  ///< A2 only: ladder index, or deltas.size() for the delta* stratum; -1 otherwise
    Interval iv;
};

struct ClassificationRecord {
    std::int64_t a0, a1, a2, H;
    std::vector<ClassPiece> pieces;
    std::array<double, 3> measure{0, 0, 0};
    std::vector<double> stratum_measure;
    double total = 0;
    double sliver = 0;  ///< |sum of class measures - total|
};

struct ClassifyOptions {
    int workers = 1;
};

namespace detail {

struct Thresholds {
    double T1, T3;
    std::vector<double> ladder;  ///< H^{1-delta_i}
};

inline Thresholds thresholds(double H, double v, const DeltaLadder& L) {
    Thresholds T;
    T.T1 = std::pow(H, 1 - L.epsilon);
    T.T3 = std::pow(H, (2 - v) / 3);
    for (double d : L.deltas) T.ladder.push_back(std::pow(H, 1 - d));
    return T;
}

/// Class and stratum of a point with |G'| = g.
inline std::pair<FormClass, int> classify_value(double g, const Thresholds& T) {
    if (g > T.T1) return {FormClass::A1, -1};
    if (g <= T.T3) return {FormClass::A3, -1};
    const int l = static_cast<int>(T.ladder.size());
    for (int i = 0; i < l; ++i) {
        const double lower = i + 1 < l ? T.ladder[i + 1] : 1.0;
        if (g > lower && g <= T.ladder[i]) return {FormClass::A2, i};
    }
    return {FormClass::A2, l};
}

} // namespace detail

/// Splits every solution interval of the stage at the |G'| thresholds of the three
/// classes and of the delta ladder.
inline std::vector<ClassificationRecord> classify(const SolutionStage& stage, double epsilon, double epsilon1,
                                                  const ClassifyOptions& opt = {}) {
    if (!stage.curve || !stage.lambda) throw invalid_input("classify: stage has no curve attached");
    if (!(epsilon > 0 && epsilon < 1)) throw domain_error("classify: epsilon must lie in (0, 1)");
    if (!(epsilon1 > 0)) throw domain_error("classify: epsilon1 must be positive");
    if (!(stage.v > 2 + 3 * epsilon1))
        throw domain_error("classify: parameters violate v > 2 + 3*epsilon1");
    const DeltaLadder L = delta_ladder(stage.v, epsilon);
    PlanarContext ctx(*stage.curve, *stage.lambda);
    const double v = stage.v;

    return parallel_map<ClassificationRecord>(stage.forms.size(), opt.workers, [&](std::size_t idx) {
        const StageForm& f = stage.forms[idx];
        const auto T = detail::thresholds(static_cast<double>(f.H), v, L);
        std::vector<double> cutvals{T.T1, T.T3, 1.0};
        cutvals.insert(cutvals.end(), T.ladder.begin(), T.ladder.end());
        PairModel<double> m(ctx, f.a1, f.a2);
        auto g = [&](double x) { return m.dP(x); };
        auto dg = [&](double x) { return m.d2P(x); };

        ClassificationRecord rec{f.a0, f.a1, f.a2, f.H, {}, {0, 0, 0}, std::vector<double>(L.deltas.size() + 1, 0.0)};
        auto add = [&](FormClass c, int s, double lo, double hi) {
            if (!(hi > lo)) return;
            if (!rec.pieces.empty() && rec.pieces.back().cls == c && rec.pieces.back().stratum == s &&
                rec.pieces.back().iv.hi >= lo) {
                rec.pieces.back().iv.hi = hi;
            } else {
                rec.pieces.push_back({c, s, {lo, hi}});
            }
        };
        for (const auto& iv : f.intervals) {
            rec.total += iv.length();
            if (!(iv.hi > iv.lo)) continue;
            for (const auto& pc : m.pieces(iv.lo, iv.hi)) {
                // |P'| is monotone on the piece
                const double gp = m.dP(pc.p), gq = m.dP(pc.q);
                const double sgn = (gp + gq) >= 0 ? 1.0 : -1.0;
                std::vector<double> cuts{pc.p};
                for (double T0 : cutvals) {
                    const double y = sgn * T0;
                    if ((gp - y) * (gq - y) < 0)
                        cuts.push_back(roots::solve_monotone<double>(g, dg, pc.p, pc.q, gq > gp, y, pc.p));
                }
                cuts.push_back(pc.q);
                std::sort(cuts.begin(), cuts.end());
                for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
                    const double lo = cuts[j], hi = cuts[j + 1];
                    if (!(hi > lo)) continue;
                    auto [c, s] = detail::classify_value(std::fabs(m.dP(lo + (hi - lo) / 2)), T);
                    add(c, s, lo, hi);
                }
            }
        }
        double sum = 0;
        for (const auto& p : rec.pieces) {
            const double len = p.iv.length();
            rec.measure[static_cast<int>(p.cls) - 1] += len;
            if (p.cls == FormClass::A2) rec.stratum_measure[p.stratum] += len;
            sum += len;
        }
        rec.sliver = std::fabs(sum - rec.total);
        return rec;
    });
}

struct ClassificationSummary {
    DeltaLadder ladder;
    double epsilon = 0, epsilon1 = 0, c = 0;
    std::array<std::uint64_t, 3> piece_count{0, 0, 0};
    std::array<std::uint64_t, 3> form_count{0, 0, 0};  ///< forms owning at least one piece of the class
    std::array<double, 3> measure{0, 0, 0};
    std::vector<std::uint64_t> stratum_count;
    std::vector<double> stratum_measure;
    double total = 0;
    double max_sliver = 0;
};

inline ClassificationSummary summarize(const std::vector<ClassificationRecord>& recs, double v, double epsilon,
                                       double epsilon1) {
    ClassificationSummary s;
    s.ladder = delta_ladder(v, epsilon);
    s.epsilon = epsilon;
    s.epsilon1 = epsilon1;
    s.c = 1 + epsilon1;
    s.stratum_count.assign(s.ladder.deltas.size() + 1, 0);
    s.stratum_measure.assign(s.ladder.deltas.size() + 1, 0.0);
    for (const auto& r : recs) {
        std::array<bool, 3> seen{false, false, false};
        for (const auto& p : r.pieces) {
            const int k = static_cast<int>(p.cls) - 1;
            ++s.piece_count[k];
            seen[k] = true;
            if (p.cls == FormClass::A2) ++s.stratum_count[p.stratum];
        }
        for (int k = 0; k < 3; ++k) {
            s.form_count[k] += seen[k];
            s.measure[k] += r.measure[k];
        }
        for (std::size_t i = 0; i < r.stratum_measure.size(); ++i) s.stratum_measure[i] += r.stratum_measure[i];
        s.total += r.total;
        s.max_sliver = std::max(s.max_sliver, r.sliver);
    }
    return s;
}

// ---------------------------------------------------------------- class I / II cells

struct A3Segment {
    Point3 a;  ///< (a0, a1, a2)
    Interval iv;
};

inline std::vector<A3Segment> a3_segments(const std::vector<ClassificationRecord>& recs) {
    std::vector<A3Segment> out;
    for (const auto& r : recs)
        for (const auto& p : r.pieces)
            if (p.cls == FormClass::A3) out.push_back({{r.a0, r.a1, r.a2}, p.iv});
    return out;
}

/// Every stored interval of a stage built with cap_exponent = (2 - v)/3 is an A3 piece.
inline std::vector<A3Segment> a3_segments(const SolutionStage& capped_stage) {
    if (!capped_stage.capped()) throw invalid_input("a3_segments: stage was built without a derivative cap");
    std::vector<A3Segment> out;
    for (const auto& f : capped_stage.forms)
        for (const auto& iv : f.intervals) out.push_back({{f.a0, f.a1, f.a2}, iv});
    return out;
}

struct CellPartition {
    Interval I;
    int t = 0;
    double c = 0;
    std::size_t cells = 0;
    double cell_length = 0;
    double threshold = 0;
    std::vector<std::uint32_t> segment_count;
    std::vector<std::size_t> class_II;               ///< cell indices, ascending
    std::vector<std::vector<Point3>> incident;       ///< sorted distinct triples per class II cell

    Interval cell(std::size_t j) const {
        return {I.lo + cell_length * static_cast<double>(j),
                j + 1 == cells ? I.hi : I.lo + cell_length * static_cast<double>(j + 1)};
    }
    std::size_t class_I_count() const { return cells - class_II.size(); }
};

/// Splits I into ceil(2^{ct}) equal half-open cells (the last one closed) and tags a cell
/// class II when more than threshold_constant * 2^{t(3/2 - c)} A3 segments meet it.
inline CellPartition class_II_partition(const std::vector<A3Segment>& segs, Interval I, int t, double epsilon1,
                                        double threshold_constant = 1.0) {
    if (!(epsilon1 > 0)) throw domain_error("class_II_partition: epsilon1 must be positive");
    if (!(I.hi > I.lo)) throw domain_error("class_II_partition: empty interval");
    CellPartition P;
    P.I = I;
    P.t = t;
    P.c = 1 + epsilon1;
    P.cells = static_cast<std::size_t>(std::ceil(std::exp2(P.c * t) - 1e-9));
    P.cell_length = (I.hi - I.lo) / static_cast<double>(P.cells);
    P.threshold = threshold_constant * std::exp2(t * (1.5 - P.c));
    P.segment_count.assign(P.cells, 0);
    auto index = [&](double x) {
        const double u = std::floor((x - I.lo) / P.cell_length);
        return static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(P.cells - 1)));
    };
    std::vector<std::vector<Point3>> hits(P.cells);
    for (const auto& s : segs) {
        if (s.iv.hi < I.lo || s.iv.lo > I.hi) continue;
        const std::size_t j0 = index(std::max(s.iv.lo, I.lo)), j1 = index(std::min(s.iv.hi, I.hi));
        for (std::size_t j = j0; j <= j1; ++j) {
            ++P.segment_count[j];
            hits[j].push_back(s.a);
        }
    }
    for (std::size_t j = 0; j < P.cells; ++j) {
        if (static_cast<double>(P.segment_count[j]) > P.threshold) {
            P.class_II.push_back(j);
            auto& h = hits[j];
            std::sort(h.begin(), h.end());
            h.erase(std::unique(h.begin(), h.end()), h.end());
            P.incident.push_back(std::move(h));
        }
    }
    return P;
}

// ---------------------------------------------------------------- incidence

enum class IncidenceKind { empty, point, line, plane, violation };

inline const char* to_string(IncidenceKind k) {
    switch (k) {
    case IncidenceKind::empty: return "empty";
    case IncidenceKind::point: return "point";
    case IncidenceKind::line: return "line";
    case IncidenceKind::plane: return "plane";
    case IncidenceKind::violation: return "violation";
    }
    return "?";
}

struct IncidenceDiagnostics {
    IncidenceKind kind = IncidenceKind::empty;
    Interval cell{0, 0};
    double x = 0;  ///< evaluation point (cell midpoint)
    std::size_t N = 0;
    // plane case: A a0 + B a1 + C a2 = D
    std::int64_t A = 0, B = 0, C = 0, D = 0;
    double B_minus_Ax = 0, C_minus_Af = 0, T = 0;
    double bound_30 = 0;   ///< 2^{t(2-2c)} / |B - A x|
    double bound_32T = 0;  ///< 2^{t(2-3c)} / |T|
    double bound_32A = 0;  ///< 2^{t(2-c)} / |A|
    // line case: alpha + k beta
    Point3 alpha{0, 0, 0}, beta{0, 0, 0};
    double beta_bound = 0;  ///< 2^{t(c - 1/2)}
    bool beta_bound_ok = true;
    std::int64_t K_beta2 = 0;
    // violation: four affinely independent triples
    std::array<Point3, 4> witness{};
    bool verified = true;  ///< every triple satisfies the fitted relation exactly
};

namespace detail {

inline Point3 sub(const Point3& p, const Point3& q) { return {p[0] - q[0], p[1] - q[1], p[2] - q[2]}; }

inline Point3 primitive(Point3 u) {
    const std::int64_t g = gcd3(u[0], u[1], u[2]);
    if (g > 1)
        for (auto& c : u) c /= g;
    for (auto c : u) {
        if (c == 0) continue;
        if (c < 0)
            for (auto& d : u) d = -d;
        break;
    }
    return u;
}

inline __int128 dot128(const Point3& n, const Point3& p) {
    return static_cast<__int128>(n[0]) * p[0] + static_cast<__int128>(n[1]) * p[1] + static_cast<__int128>(n[2]) * p[2];
}

} // namespace detail

/// Exact affine fit of the incident triples of one class II cell.
inline IncidenceDiagnostics incidence_analysis(Interval cell, const std::vector<Point3>& triples, int t, double c,
                                               const CurveSystem& curve) {
    IncidenceDiagnostics d;
    d.cell = cell;
    d.x = cell.lo + (cell.hi - cell.lo) / 2;
    std::vector<Point3> pts = triples;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    d.N = pts.size();
    if (pts.empty()) return d;
    if (pts.size() == 1) {
        d.kind = IncidenceKind::point;
        d.alpha = pts[0];
        return d;
    }
    const Point3& p0 = pts[0];
    // greedy affinely independent picks
    std::vector<std::size_t> basis;
    std::vector<lattice::IVec> rows;
    for (std::size_t i = 1; i < pts.size() && basis.size() < 3; ++i) {
        const Point3 u = detail::sub(pts[i], p0);
        auto trial = rows;
        trial.push_back({u[0], u[1], u[2]});
        if (lattice::rank(trial) > static_cast<int>(rows.size())) {
            rows = std::move(trial);
            basis.push_back(i);
        }
    }
    const double x = d.x;
    const double f = curve.eval<double>(2, 0, x), fp = curve.eval<double>(2, 1, x);
    if (basis.size() == 3) {
        d.kind = IncidenceKind::violation;
        d.witness = {p0, pts[basis[0]], pts[basis[1]], pts[basis[2]]};
        return d;
    }
    if (basis.size() == 1) {
        d.kind = IncidenceKind::line;
        d.alpha = p0;
        d.beta = detail::primitive(detail::sub(pts[basis[0]], p0));
        for (const auto& p : pts) {
            // p - p0 must be parallel to beta
            const Point3 w = cross(detail::sub(p, p0), d.beta);
            d.verified = d.verified && w[0] == 0 && w[1] == 0 && w[2] == 0;
        }
        d.beta_bound = std::exp2(t * (c - 0.5));
        d.beta_bound_ok = static_cast<double>(std::llabs(d.beta[0])) <= d.beta_bound;
        // K(beta2): (beta0, beta1) with |beta0 + beta2 g(y)|, |beta1 + beta2 y| <= Hb^{-1/(1+2 eps1)}
        const std::int64_t b2 = d.beta[2];
        const double Hb = static_cast<double>(std::max({std::llabs(d.beta[0]), std::llabs(d.beta[1]), std::llabs(b2)}));
        const double r = std::pow(std::max(Hb, 1.0), 1.0 / (1 - 2 * c));
        const double y = fp, gy = f - x * fp;
        auto count = [](double centre, double rad) {
            return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(centre + rad)) -
                                                 static_cast<std::int64_t>(std::ceil(centre - rad)) + 1);
        };
        d.K_beta2 = count(-static_cast<double>(b2) * gy, r) * count(-static_cast<double>(b2) * y, r);
        return d;
    }
    d.kind = IncidenceKind::plane;
    const Point3 n = detail::primitive(cross(detail::sub(pts[basis[0]], p0), detail::sub(pts[basis[1]], p0)));
    d.A = n[0];
    d.B = n[1];
    d.C = n[2];
    const __int128 D = detail::dot128(n, p0);
    d.D = static_cast<std::int64_t>(D);
    for (const auto& p : pts) d.verified = d.verified && detail::dot128(n, p) == D;
    const double A = static_cast<double>(d.A), B = static_cast<double>(d.B), C = static_cast<double>(d.C);
    d.B_minus_Ax = std::fabs(B - A * x);
    d.C_minus_Af = std::fabs(C - A * f);
    d.T = fp * (B - A * x) - (C - A * f);
    d.bound_30 = std::exp2(t * (2 - 2 * c)) / d.B_minus_Ax;
    d.bound_32T = std::exp2(t * (2 - 3 * c)) / std::fabs(d.T);
    d.bound_32A = std::exp2(t * (2 - c)) / std::fabs(A);
    return d;
}

struct CoverReport {
    double v = 0;
    int t = 0;
    double epsilon1 = 0, threshold_constant = 1;
    std::size_t segments = 0;
    CellPartition partition;
    std::vector<IncidenceDiagnostics> cells;  ///< one per class II cell
    std::size_t violations = 0, lines = 0, planes = 0, points = 0;
};

/// A3 stage at t (built with the derivative cap), its cell partition and the incidence
/// analysis of every class II cell.
inline CoverReport cover_analysis(const CurveSystem& curve, const InhomFunction& lambda, double v, int t,
                                  double epsilon1, double threshold_constant = 1.0, const StageOptions& base = {}) {
    if (!(v > 2 + 3 * epsilon1)) throw domain_error("cover_analysis: parameters violate v > 2 + 3*epsilon1");
    StageOptions opt = base;
    opt.keep_forms = true;
    opt.keep_union = false;
    opt.cap_exponent = (2 - v) / 3;
    const auto stage = build_stage(curve, lambda, v, t, opt);
    CoverReport rep;
    rep.v = v;
    rep.t = t;
    rep.epsilon1 = epsilon1;
    rep.threshold_constant = threshold_constant;
    const auto segs = a3_segments(stage);
    rep.segments = segs.size();
    rep.partition = class_II_partition(segs, {curve.a(), curve.b()}, t, epsilon1, threshold_constant);
    for (std::size_t i = 0; i < rep.partition.class_II.size(); ++i) {
        auto d = incidence_analysis(rep.partition.cell(rep.partition.class_II[i]), rep.partition.incident[i], t,
                                    rep.partition.c, curve);
        rep.violations += d.kind == IncidenceKind::violation;
        rep.lines += d.kind == IncidenceKind::line;
        rep.planes += d.kind == IncidenceKind::plane;
        rep.points += d.kind == IncidenceKind::point;
        rep.cells.push_back(std::move(d));
    }
    return rep;
}

// ---------------------------------------------------------------- s-volume

/// Histogram of log2 interval widths of one stage.
struct WidthHistogram {
    static constexpr int bins_per_unit = 64;
    static constexpr int min_log2 = -200;
    static constexpr int max_log2 = 8;

    int t = 0;
    std::vector<std::uint64_t> count;
    std::vector<double> log2_sum;
    std::uint64_t total = 0;

    WidthHistogram() : count(size(), 0), log2_sum(size(), 0.0) {}

    static std::size_t size() { return static_cast<std::size_t>((max_log2 - min_log2) * bins_per_unit); }

    void add(double width, std::uint64_t mult = 1) {
        if (!(width > 0)) return;
        const double l = std::clamp(std::log2(width), double(min_log2), double(max_log2) - 1e-9);
        const auto b = static_cast<std::size_t>((l - min_log2) * bins_per_unit);
        count[b] += mult;
        log2_sum[b] += l * static_cast<double>(mult);
        total += mult;
    }

    void merge(const WidthHistogram& o) {
        for (std::size_t b = 0; b < count.size(); ++b) {
            count[b] += o.count[b];
            log2_sum[b] += o.log2_sum[b];
        }
        total += o.total;
    }

    /// sum of width^s, each bin represented by its mean log2 width
    long double sum_power(double s) const {
        long double acc = 0;
        for (std::size_t b = 0; b < count.size(); ++b)
            if (count[b]) {
                const long double mean = log2_sum[b] / static_cast<double>(count[b]);
                acc += static_cast<long double>(count[b]) * std::exp2(static_cast<long double>(s) * mean);
            }
        return acc;
    }
};

/// Widths of all solution intervals of stage t, streamed (nothing stored).
inline WidthHistogram stage_width_histogram(const CurveSystem& curve, const InhomFunction& lambda, double v, int t,
                                            const StageOptions& opt = {}) {
    if (curve.n() != 2) throw invalid_input("stage_width_histogram: planar curves only (n = 2)");
    if (!(v > 2)) throw domain_error("stage_width_histogram: v must exceed 2");
    if (t < 2 || t > 30) throw domain_error("stage_width_histogram: t must lie in [2, 30]");
    const std::int64_t H_lo = std::int64_t{1} << (t - 1), H_hi = (std::int64_t{1} << t) - 1;
    check_sweep_budget(curve, H_hi, opt.budget, "stage_width_histogram");
    PlanarContext ctx(curve, lambda);
    const std::int64_t B0 = a0_bound(curve, lambda, H_hi);
    // lambda = 0: F and -F have the same solution set
    const bool sym = lambda.is_zero();
    const std::int64_t a2_first = sym ? 0 : -H_hi;
    auto parts = parallel_map<WidthHistogram>(
        static_cast<std::size_t>(H_hi - a2_first + 1), opt.workers, [&](std::size_t idx) {
            const std::int64_t a2 = a2_first + static_cast<std::int64_t>(idx);
            WidthHistogram h;
            for_each_a1(a2, H_lo, H_hi, [&](std::int64_t a1) {
                if (sym && !canonical_pair(a1, a2)) return;
                const double thr = std::pow(static_cast<double>(std::max(std::llabs(a1), std::llabs(a2))), -v);
                PairModel<double> m(ctx, a1, a2);
                detail::pair_solution_sets<double>(m, curve.a(), curve.b(), thr, B0,
                                                   std::numeric_limits<double>::infinity(),
                                                   [&](std::int64_t, const std::vector<Interval>& ivs) {
                                                       for (const auto& iv : ivs) h.add(iv.length(), sym ? 2 : 1);
                                                   });
            });
            return h;
        });
    WidthHistogram out;
    out.t = t;
    for (const auto& p : parts) out.merge(p);
    return out;
}

struct SVolumeResult {
    std::vector<int> t;
    std::vector<double> s_grid;
    std::vector<double> slope;  ///< least-squares slope in t of log2 S_t(s)
    double s_star = 0;
    bool bracketed = false;  ///< the sign change of the slope lies inside the grid
    double target = 0;
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline double svolume_slope(const std::vector<WidthHistogram>& st, double s) {
    std::vector<double> x, y;
    for (const auto& h : st) {
        x.push_back(h.t);
        y.push_back(static_cast<double>(std::log2(std::max(h.sum_power(s), 1e-300L))));
    }
    return ls_slope(x, y);
}

} // namespace detail

/// s* = the smallest s at which the per-stage sums S_t(s) = sum |d|^s decay in t
/// (negative least-squares slope of log2 S_t(s)); located on the grid, then refined by bisection.
inline SVolumeResult svolume_critical_exponent(const std::vector<WidthHistogram>& stages, std::vector<double> s_grid,
                                               double v) {
    if (stages.size() < 3) throw invalid_input("svolume_critical_exponent: need at least 3 stages");
    if (s_grid.size() < 2) throw invalid_input("svolume_critical_exponent: need at least 2 grid values");
    std::sort(s_grid.begin(), s_grid.end());
    SVolumeResult r;
    for (const auto& h : stages) r.t.push_back(h.t);
    r.s_grid = s_grid;
    r.target = dimension_target(v);
    for (double s : s_grid) r.slope.push_back(detail::svolume_slope(stages, s));
    std::size_t j = 0;
    while (j < s_grid.size() && r.slope[j] >= 0) ++j;
    if (j == 0) {
        r.s_star = s_grid.front();
        return r;
    }
    if (j == s_grid.size()) {
        r.s_star = s_grid.back();
        return r;
    }
    double lo = s_grid[j - 1], hi = s_grid[j];
    for (int it = 0; it < 60; ++it) {
        const double mid = lo + (hi - lo) / 2;
        if (detail::svolume_slope(stages, mid) >= 0) lo = mid; else hi = mid;
    }
    r.s_star = hi;
    r.bracketed = true;
    return r;
}

// ---------------------------------------------------------------- box counting

struct ScaleCount {
    int k = 0;                   ///< relative scale 2^{-k}
    double log2_scale = 0;       ///< absolute scale 2^{-(k + L)}
    std::uint64_t count = 0;
    std::int64_t H_lo = 0, H_hi = 0;
    std::uint64_t intervals = 0;
};

struct FitResult {
    double slope = 0, intercept = 0, residual = 0;
    std::size_t used = 0;
    bool zero_counts = false;
};

/// Least squares of log N against log(1/eps) = k log 2, skipping zero counts.
inline FitResult fit_log_counts(const std::vector<ScaleCount>& pts) {
    FitResult f;
    std::vector<double> x, y;
    for (const auto& p : pts) {
        if (p.count == 0) {
            f.zero_counts = true;
            continue;
        }
        x.push_back(p.k * std::log(2.0));
        y.push_back(std::log(static_cast<double>(p.count)));
    }
    f.used = x.size();
    if (x.size() < 3) return f;
    f.slope = detail::ls_slope(x, y);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss += e * e;
    }
    f.residual = std::sqrt(ss / x.size());
    return f;
}

struct BoxPlan {
    int L = 0;                ///< window length 2^{-L}
    std::size_t M = 1;        ///< number of windows
    int finest_stage = 0;     ///< ceil of log2 of the largest matched height
    double expected_coarse = 0;  ///< expected cells hit at k_min, over all windows
};

struct BoxOptions {
    int k_min = 6, k_max = 14;
    int max_stage = 10;
    double epsilon_class = 0.1;  ///< keep pieces with |G'| > H^{1 - epsilon_class}
    int window_exponent = -1;    ///< L; negative: planned
    std::size_t windows = 0;     ///< M; 0: planned
    std::size_t min_windows = 1000, max_windows = 20000;
    double target_coarse = 40;
    std::uint64_t seed = 42;
    int workers = 1;
};

/// Largest L with matched heights up to 2^max_stage whose expected coarse count
/// sigma-scales to at least target_coarse within max_windows windows.
inline BoxPlan plan_box_windows(double v, double length, const BoxOptions& opt) {
    const double sigma = dimension_target(v);
    BoxPlan p;
    auto expected = [&](int L) { return std::exp2((opt.k_min + L) * sigma - L) * length; };
    int L = opt.window_exponent >= 0 ? opt.window_exponent
                                     : std::max(0, static_cast<int>(std::floor(opt.max_stage * (v + 1) - opt.k_max)));
    if (opt.window_exponent < 0)
        while (L > 0 && opt.target_coarse / expected(L) > static_cast<double>(opt.max_windows)) --L;
    p.L = L;
    if (L == 0) {
        p.M = 1;
    } else if (opt.windows > 0) {
        p.M = opt.windows;
    } else {
        const double need = std::ceil(opt.target_coarse / expected(L));
        p.M = static_cast<std::size_t>(std::clamp(need, static_cast<double>(opt.min_windows),
                                                  static_cast<double>(opt.max_windows)));
    }
    p.finest_stage = static_cast<int>(std::ceil((opt.k_max + L) / (v + 1) - 1e-12));
    p.expected_coarse = expected(L) * static_cast<double>(p.M) / (L == 0 ? length : 1.0);
    return p;
}

struct DimensionEstimate {
    double v = 0;
    int n = 2;
    std::string lambda;
    BoxPlan plan;
    std::vector<ScaleCount> points;
    FitResult fit;
    double target = 0, lower_target = 0;
    bool monotone_counts = true;  ///< N non-increasing in eps
    std::optional<double> s_star;
};

namespace detail {

/// Cells 0..2^k-1 of [w, w + ell] hit by the A1 parts of the matched solution intervals.
inline std::uint64_t window_cells(const PlanarContext& ctx, long double w, long double ell, int k, std::int64_t Hlo,
                                  std::int64_t Hhi, double v, double epsilon_class, std::int64_t B0, long double eta,
                                  std::uint64_t& nint) {
    const long double eps = std::ldexp(ell, -k);
    const std::int64_t maxc = (std::int64_t{1} << k) - 1;
    std::vector<std::int64_t> cells;
    auto handle = [&](std::int64_t a1, std::int64_t a2) {
        const std::int64_t H = std::max(std::llabs(a1), std::llabs(a2));
        if (H < Hlo || H > Hhi) return;
        const long double Hd = static_cast<long double>(H);
        const long double thr = std::pow(Hd, -static_cast<long double>(v));
        const long double T1 = epsilon_class > 0 ? std::pow(Hd, 1 - static_cast<long double>(epsilon_class)) : -1;
        PairModel<long double> m(ctx, a1, a2);
        auto g = [&](long double x) { return m.dP(x); };
        auto dg = [&](long double x) { return m.d2P(x); };
        for (const auto& pc : m.pieces(w, w + ell)) {
            m.solutions(pc, thr, -B0, B0, [&](std::int64_t, long double l, long double r) {
                // |P'| is monotone on the piece: {|P'| > T1} ∩ [l, r] is an interval
                const long double dl = m.dP(l), dr = m.dP(r);
                const long double sgn = (dl + dr) >= 0 ? 1 : -1;
                const bool okl = std::fabs(dl) > T1, okr = std::fabs(dr) > T1;
                if (!okl && !okr) return;
                if (okl != okr) {
                    const long double y = sgn * T1;
                    const long double z = roots::solve_monotone<long double>(g, dg, l, r, dr > dl, y, l);
                    if (okl) r = z; else l = z;
                }
                ++nint;
                std::int64_t c1 = static_cast<std::int64_t>(std::floor((l - w) / eps));
                std::int64_t c2 = static_cast<std::int64_t>(std::floor((r - w) / eps));
                c1 = std::max<std::int64_t>(0, c1);
                c2 = std::min(maxc, c2);
                for (std::int64_t c = c1; c <= c2; ++c) cells.push_back(c);
            });
        }
    };
    if (eta >= 0.5L) {
        for (std::int64_t a2 = -Hhi; a2 <= Hhi; ++a2)
            for_each_a1(a2, Hlo, Hhi, [&](std::int64_t a1) { handle(a1, a2); });
    } else {
        // a0 + a1 w + P_{a2}(w) within eta of an integer: search frac(a1 w) by a2
        std::vector<std::pair<long double, std::int64_t>> fr;
        fr.reserve(static_cast<std::size_t>(2 * Hhi + 1));
        for (std::int64_t a1 = -Hhi; a1 <= Hhi; ++a1) {
            const long double p = static_cast<long double>(a1) * w;
            fr.push_back({p - std::floor(p), a1});
        }
        std::sort(fr.begin(), fr.end());
        auto scan = [&](long double l, long double r, std::int64_t a2) {
            auto it = std::lower_bound(fr.begin(), fr.end(), std::make_pair(l, std::numeric_limits<std::int64_t>::min()));
            for (; it != fr.end() && it->first <= r; ++it) handle(it->second, a2);
        };
        for (std::int64_t a2 = -Hhi; a2 <= Hhi; ++a2) {
            PairModel<long double> m0(ctx, 0, a2);
            long double b = m0.P(w);
            b -= std::floor(b);
            long double centre = -b;
            centre -= std::floor(centre);
            const long double lo = centre - eta, hi = centre + eta;
            if (lo < 0) {
                scan(lo + 1, 1, a2);
                scan(0, hi, a2);
            } else if (hi > 1) {
                scan(lo, 1, a2);
                scan(0, hi - 1, a2);
            } else {
                scan(lo, hi, a2);
            }
        }
    }
    std::sort(cells.begin(), cells.end());
    return static_cast<std::uint64_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
}

} // namespace detail

/// Scale-matched box counting inside M seeded windows of length 2^{-L}: at relative
/// scale 2^{-k} the set is the transversal part of the solution intervals of forms
/// with height in [h/2, h), h = 2^{(k+L)/(v+1)}.
inline DimensionEstimate box_dimension(const CurveSystem& curve, const InhomFunction& lambda, double v,
                                       const BoxOptions& opt = {}) {
    if (curve.n() != 2) throw invalid_input("box_dimension: planar curves only (n = 2)");
    if (!(v > 2)) throw domain_error("box_dimension: v must exceed 2");
    if (opt.k_max - opt.k_min < 2) throw invalid_input("box_dimension: need at least 3 scales");
    if (opt.k_min < 1 || opt.k_max > 30) throw domain_error("box_dimension: scales must lie in 2^-1 .. 2^-30");
    const double len = curve.length();
    DimensionEstimate est;
    est.v = v;
    est.lambda = lambda.label();
    est.plan = plan_box_windows(v, len, opt);
    est.target = dimension_target(v);
    est.lower_target = lower_bound_target(2, v);
    const int L = est.plan.L;
    const long double ell = L == 0 ? static_cast<long double>(len) : std::ldexp(1.0L, -L);
    if (ell > len) throw domain_error("box_dimension: window longer than I");
    PlanarContext ctx(curve, lambda);
    const double f1 = detail::grid_sup(curve.f(), 1, curve.a(), curve.b(), curve.options().grid_points);
    const double l1 = lambda.sup(1, curve.a(), curve.b(), curve.options().grid_points);

    std::vector<long double> ws(est.plan.M);
    std::mt19937_64 rng(opt.seed);
    for (auto& w : ws) {
        const long double u = static_cast<long double>(rng() >> 11) * std::ldexp(1.0L, -53);
        w = L == 0 ? static_cast<long double>(curve.a()) : curve.a() + u * (len - ell);
    }
    for (int k = opt.k_min; k <= opt.k_max; ++k) {
        const double h = std::exp2((k + L) / (v + 1));
        ScaleCount sc;
        sc.k = k;
        sc.log2_scale = -(k + L);
        sc.H_lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(h / 2)));
        sc.H_hi = static_cast<std::int64_t>(std::ceil(h)) - 1;
        if (sc.H_hi >= sc.H_lo) {
            const std::int64_t B0 = a0_bound(curve, lambda, sc.H_hi);
            const long double eta = ell * (sc.H_hi * (1 + f1) + l1) +
                                    std::pow(static_cast<long double>(sc.H_lo), -static_cast<long double>(v)) + 1e-15L;
            auto parts = parallel_map<std::pair<std::uint64_t, std::uint64_t>>(
                ws.size(), opt.workers, [&](std::size_t i) {
                    std::uint64_t nint = 0;
                    const auto c = detail::window_cells(ctx, ws[i], ell, k, sc.H_lo, sc.H_hi, v, opt.epsilon_class,
                                                        B0, eta, nint);
                    return std::make_pair(c, nint);
                });
            for (const auto& [c, ni] : parts) {
                sc.count += c;
                sc.intervals += ni;
            }
        }
        est.points.push_back(sc);
    }
    est.fit = fit_log_counts(est.points);
    for (std::size_t i = 1; i < est.points.size(); ++i)
        est.monotone_counts = est.monotone_counts && est.points[i].count >= est.points[i - 1].count;
    return est;
}

/// Literal count of the grid cells [x0 + j eps, x0 + (j+1) eps) of [x0, x0 + len) met by S,
/// for eps = len 2^{-k}, k in [k_min, k_max].
inline std::vector<ScaleCount> box_counts(const IntervalSet& S, double x0, double len, int k_min, int k_max) {
    std::vector<ScaleCount> out;
    for (int k = k_min; k <= k_max; ++k) {
        const double eps = std::ldexp(len, -k);
        const std::int64_t maxc = (std::int64_t{1} << k) - 1;
        std::uint64_t cnt = 0;
        std::int64_t last = -1;
        for (const auto& iv : S) {
            if (iv.hi < x0 || iv.lo >= x0 + len) continue;
            std::int64_t c1 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((iv.lo - x0) / eps)));
            std::int64_t c2 = std::min(maxc, static_cast<std::int64_t>(std::floor((iv.hi - x0) / eps)));
            c1 = std::max(c1, last + 1);
            if (c2 >= c1) {
                cnt += static_cast<std::uint64_t>(c2 - c1 + 1);
                last = c2;
            }
        }
        ScaleCount sc;
        sc.k = k;
        sc.log2_scale = std::log2(eps);
        sc.count = cnt;
        sc.intervals = S.size();
        out.push_back(sc);
    }
    return out;
}

/// Points covered by at least m of the given sets.
inline IntervalSet coverage_at_least(const std::vector<IntervalSet>& sets, int m) {
    std::vector<std::pair<double, int>> ev;
    for (const auto& s : sets)
        for (const auto& iv : s) {
            ev.push_back({iv.lo, +1});
            ev.push_back({iv.hi, -1});
        }
    // openings before closings at equal positions: touching intervals count as overlapping
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    });
    std::vector<Interval> out;
    int depth = 0;
    double start = 0;
    for (const auto& [x, d] : ev) {
        const int before = depth;
        depth += d;
        if (before < m && depth >= m) start = x;
        if (before >= m && depth < m) out.push_back({start, x});
    }
    return IntervalSet(std::move(out));
}

/// Survivor proxy: points of I covered by at least m of the given stage unions.
inline DimensionEstimate survivor_dimension(const std::vector<IntervalSet>& stage_unions, int m, Interval I, double v,
                                            int k_min, int k_max) {
    if (k_max - k_min < 2) throw invalid_input("survivor_dimension: need at least 3 scales");
    DimensionEstimate est;
    est.v = v;
    est.target = dimension_target(v);
    est.lower_target = lower_bound_target(2, v);
    est.points = box_counts(coverage_at_least(stage_unions, m), I.lo, I.hi - I.lo, k_min, k_max);
    est.fit = fit_log_counts(est.points);
    for (std::size_t i = 1; i < est.points.size(); ++i)
        est.monotone_counts = est.monotone_counts && est.points[i].count >= est.points[i - 1].count;
    return est;
}

} // namespace inhomo
