#pragma once

#include "config.hpp"
#include "construct.hpp"
#include "counting.hpp"
#include "dimension.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "ubiquity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace inhomo::cli {

enum ExitCode { exit_pass = 0, exit_fail = 1, exit_usage = 2, exit_budget = 3 };

struct RunOptions {
    std::filesystem::path out_dir;
    int workers = 1;
};

struct CommandResult {
    int exit_code = exit_pass;
    io::json summary;
    std::vector<std::filesystem::path> files;
};

/// --out, then INHOMO_OUT_DIR, then output.dir of the config.
inline std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("INHOMO_OUT_DIR"); env && *env) return env;
    return cfg.out_dir;
}

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline io::json curve_json(const ExperimentConfig& c) {
    io::json j;
    j["curve"] = c.curve.name;
    j["a"] = c.curve.a;
    j["b"] = c.curve.b;
    j["lambda"] = c.lambda.name;
    if (c.lambda.name == "constant") j["lambda_value"] = c.lambda.value;
    if (c.lambda.name == "power") j["lambda_k"] = c.lambda.k;
    return j;
}

/// Writes a flagged record for an exhausted budget and returns exit 3.
inline int budget_exhausted(io::JsonlWriter& w, const budget_error& e, io::json& summary) {
    io::json r;
    r["record"] = "budget_exhausted";
    r["partial"] = true;
    r["what"] = e.what();
    r["requested"] = e.requested();
    r["budget"] = e.budget();
    w.write(r);
    summary["partial"] = true;
    summary["budget_error"] = e.what();
    return exit_budget;
}

inline void prepare(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

} // namespace detail

// ---------------------------------------------------------------- ubiquity

inline std::vector<Interval> ubiquity_intervals(const ExperimentConfig& cfg) {
    const auto& u = cfg.ubiquity;
    std::vector<Interval> J = u.intervals;
    if (J.empty()) J.push_back({cfg.curve.a, cfg.curve.b});
    std::mt19937_64 rng(cfg.seed);
    const double len = cfg.curve.b - cfg.curve.a;
    for (int i = 0; i < u.random_subintervals; ++i) {
        const double l = u.min_length + detail::uniform01(rng) * (u.max_length - u.min_length);
        const double lo = cfg.curve.a + detail::uniform01(rng) * (len - l);
        J.push_back({lo, lo + l});
    }
    return J;
}

inline CommandResult cmd_ubiquity(const ExperimentConfig& cfg, const RunOptions& run) {
    detail::prepare(run.out_dir);
    const io::Provenance prov{"ubiquity", cfg.hash};
    const auto curve = make_curve(cfg.curve);
    const auto lambda = make_lambda(cfg.lambda);
    const auto& u = cfg.ubiquity;
    CommandResult res;
    const auto jl = run.out_dir / "ubiquity.jsonl", cv = run.out_dir / "ubiquity.csv", sv = run.out_dir / "ubiquity.svg";
    io::JsonlWriter w(jl, prov);
    io::json cfgrec = detail::curve_json(cfg);
    cfgrec["record"] = "config";
    w.write(cfgrec);
    UbiquityOptions opt;
    opt.budget = cfg.budget;
    opt.workers = run.workers;
    const auto J = ubiquity_intervals(cfg);
    try {
        const double kappa = u.kappa ? *u.kappa : calibrate_kappa(curve, lambda, u.t_calibrate, u.target_ratio, opt);
        auto rep = coverage_sweep(curve, lambda, u.t_range, J, kappa, opt);
        rep.calibration_t = u.t_calibrate;
        io::CsvWriter csv(cv, prov, {"t", "Q", "J_lo", "J_hi", "radius", "covered", "ratio"});
        for (const auto& r : rep.records) {
            csv.row({static_cast<std::int64_t>(r.t), r.Q, r.J.lo, r.J.hi, r.radius, r.covered, r.ratio});
            io::json j;
            j["record"] = "coverage";
            j["t"] = r.t;
            j["Q"] = r.Q;
            j["J"] = {r.J.lo, r.J.hi};
            j["kappa"] = r.kappa;
            j["radius"] = r.radius;
            j["covered"] = r.covered;
            j["ratio"] = r.ratio;
            w.write(j);
        }
        std::vector<io::PlotSeries> series;
        for (std::size_t k = 0; k < J.size(); ++k) {
            io::PlotSeries s{"J" + std::to_string(k), {}, {}, true};
            for (const auto& r : rep.records)
                if (r.J.lo == J[k].lo && r.J.hi == J[k].hi) {
                    s.x.push_back(static_cast<double>(r.Q));
                    s.y.push_back(r.ratio);
                }
            series.push_back(std::move(s));
        }
        io::write_loglog_svg(sv, "coverage ratio, kappa frozen", series, "Q = 2^t", "ratio", prov);
        res.summary["kappa"] = kappa;
        res.summary["calibration_t"] = u.t_calibrate;
        res.summary["min_ratio"] = rep.min_ratio;
        res.summary["min_ratio_per_J"] = rep.min_ratio_per_J;
        res.summary["k_min"] = u.k_min;
        res.summary["rho_step_ratio"] = rep.rho_step_ratio;
        res.summary["pass"] = rep.min_ratio >= u.k_min;
        io::json s = res.summary;
        s["record"] = "summary";
        w.write(s);
        res.exit_code = rep.min_ratio >= u.k_min ? exit_pass : exit_fail;
    } catch (const budget_error& e) {
        res.exit_code = detail::budget_exhausted(w, e, res.summary);
    }
    res.files = {jl, cv, sv};
    return res;
}

// ---------------------------------------------------------------- dimension

inline CommandResult cmd_dimension(const ExperimentConfig& cfg, const RunOptions& run) {
    detail::prepare(run.out_dir);
    const io::Provenance prov{"dimension", cfg.hash};
    const auto curve = make_curve(cfg.curve);
    const auto lambda = make_lambda(cfg.lambda);
    const auto& d = cfg.dimension;
    CommandResult res;
    const auto jl = run.out_dir / "dimension.jsonl", cv = run.out_dir / "dimension.csv",
               cc = run.out_dir / "dimension_counts.csv";
    io::JsonlWriter w(jl, prov);
    io::json cfgrec = detail::curve_json(cfg);
    cfgrec["record"] = "config";
    w.write(cfgrec);
    io::CsvWriter sum(cv, prov,
                      {"v", "lambda", "L", "M", "finest_stage", "slope", "residual", "target", "lower_target",
                       "within_tolerance", "above_floor", "s_star", "survivor_slope"});
    io::CsvWriter cnt(cc, prov, {"v", "k", "log2_scale", "count", "H_lo", "H_hi", "intervals"});
    res.files = {jl, cv, cc};
    bool all_ok = true;
    io::json slopes = io::json::array();
    try {
        for (double v : d.v) {
            BoxOptions bo;
            bo.k_min = d.k_min;
            bo.k_max = d.k_max;
            bo.max_stage = d.max_stage;
            bo.epsilon_class = d.epsilon_class;
            bo.window_exponent = d.window_exponent;
            bo.windows = d.windows;
            bo.min_windows = d.min_windows;
            bo.max_windows = d.max_windows;
            bo.seed = cfg.seed;
            bo.workers = run.workers;
            auto est = box_dimension(curve, lambda, v, bo);
            std::optional<SVolumeResult> sv;
            if (d.svolume) {
                std::vector<WidthHistogram> hs;
                StageOptions so;
                so.budget = cfg.budget;
                so.workers = run.workers;
                for (int t : d.svolume_t) hs.push_back(stage_width_histogram(curve, lambda, v, t, so));
                sv = svolume_critical_exponent(hs, d.s_grid, v);
                est.s_star = sv->s_star;
            }
            std::optional<DimensionEstimate> surv;
            if (d.survivor) {
                std::vector<IntervalSet> unions;
                StageOptions so;
                so.budget = cfg.budget;
                so.workers = run.workers;
                so.keep_forms = false;
                for (int t : d.survivor_t) unions.push_back(build_stage(curve, lambda, v, t, so).uni);
                surv = survivor_dimension(unions, d.survivor_m, {curve.a(), curve.b()}, v, d.k_min, d.k_max);
            }
            const bool within = std::fabs(est.fit.slope - est.target) <= d.tolerance && est.fit.used >= 3;
            const bool floor_ok = est.fit.slope >= est.lower_target - d.tolerance;
            all_ok = all_ok && within;
            for (const auto& p : est.points)
                cnt.row({v, static_cast<std::int64_t>(p.k), p.log2_scale, p.count, p.H_lo, p.H_hi, p.intervals});
            sum.row({v, cfg.lambda.name, static_cast<std::int64_t>(est.plan.L), static_cast<std::uint64_t>(est.plan.M),
                     static_cast<std::int64_t>(est.plan.finest_stage), est.fit.slope, est.fit.residual, est.target,
                     est.lower_target, within, floor_ok, sv ? sv->s_star : std::nan(""),
                     surv ? surv->fit.slope : std::nan("")});
            io::json j;
            j["record"] = "estimate";
            j["v"] = v;
            j["L"] = est.plan.L;
            j["M"] = est.plan.M;
            j["finest_stage"] = est.plan.finest_stage;
            j["slope"] = est.fit.slope;
            j["intercept"] = est.fit.intercept;
            j["residual"] = est.fit.residual;
            j["zero_counts"] = est.fit.zero_counts;
            j["monotone_counts"] = est.monotone_counts;
            j["target"] = est.target;
            j["lower_target"] = est.lower_target;
            j["within_tolerance"] = within;
            j["above_floor"] = floor_ok;
            io::json pts = io::json::array();
            for (const auto& p : est.points) pts.push_back({p.k, p.count, p.H_lo, p.H_hi});
            j["points"] = pts;
            if (sv) {
                j["s_star"] = sv->s_star;
                j["s_bracketed"] = sv->bracketed;
                j["s_grid"] = sv->s_grid;
                j["s_slope"] = sv->slope;
                j["svolume_t"] = sv->t;
            }
            if (surv) {
                j["survivor_m"] = d.survivor_m;
                j["survivor_slope"] = surv->fit.slope;
                io::json sp = io::json::array();
                for (const auto& p : surv->points) sp.push_back({p.k, p.count});
                j["survivor_points"] = sp;
            }
            w.write(j);
            io::json sl;
            sl["v"] = v;
            sl["slope"] = est.fit.slope;
            sl["target"] = est.target;
            sl["lower_target"] = est.lower_target;
            sl["within_tolerance"] = within;
            sl["above_floor"] = floor_ok;
            if (sv) sl["s_star"] = sv->s_star;
            slopes.push_back(sl);

            io::PlotSeries data{"N(eps)", {}, {}, false}, ref{"slope 3/(v+1)", {}, {}, true};
            for (const auto& p : est.points) {
                data.x.push_back(std::exp2(p.k));
                data.y.push_back(static_cast<double>(p.count));
            }
            if (!est.points.empty() && est.points.front().count > 0)
                for (const auto& p : est.points) {
                    ref.x.push_back(std::exp2(p.k));
                    ref.y.push_back(static_cast<double>(est.points.front().count) *
                                    std::exp2(est.target * (p.k - est.points.front().k)));
                }
            const auto svg = run.out_dir / ("dimension_v" + io::format_double(v, 6) + ".svg");
            io::write_loglog_svg(svg, "box counts, v = " + io::format_double(v, 6), {data, ref}, "1/eps (relative)",
                                 "N(eps)", prov);
            res.files.push_back(svg);
        }
        res.exit_code = all_ok ? exit_pass : exit_fail;
    } catch (const budget_error& e) {
        res.exit_code = detail::budget_exhausted(w, e, res.summary);
    }
    res.summary["estimates"] = slopes;
    res.summary["tolerance"] = d.tolerance;
    res.summary["pass"] = res.exit_code == exit_pass;
    io::json s = res.summary;
    s["record"] = "summary";
    w.write(s);
    return res;
}

// ---------------------------------------------------------------- count

inline CommandResult cmd_count(const ExperimentConfig& cfg, const RunOptions& run) {
    detail::prepare(run.out_dir);
    const io::Provenance prov{"count", cfg.hash};
    const auto curve = make_curve(cfg.curve);
    const auto lambda = make_lambda(cfg.lambda);
    const auto& k = cfg.count;
    CommandResult res;
    const auto jl = run.out_dir / "count.jsonl", cv = run.out_dir / "count.csv";
    io::JsonlWriter w(jl, prov);
    io::json cfgrec = detail::curve_json(cfg);
    cfgrec["record"] = "config";
    w.write(cfgrec);
    io::CsvWriter csv(cv, prov,
                      {"delta", "H", "N_upper", "N_lower", "ratio_upper", "ratio_lower", "ratio_vs_first", "pairs",
                       "shell_N_upper", "shell_ratio_upper", "shell_ratio_vs_first"});
    res.files = {jl, cv};
    bool ok = true;
    io::json per = io::json::array();
    try {
        for (double delta : k.delta) {
            double first = 0, worst = 0, shell_first = 0, shell_worst = 0;
            for (std::size_t i = 0; i < k.H.size(); ++i) {
                const auto r = count_N(curve, lambda, k.H[i], delta, k.v, run.workers);
                const auto sh = count_N(curve, lambda, k.H[i], delta, k.v, run.workers, true);
                if (i == 0) {
                    first = r.ratio_upper;
                    shell_first = sh.ratio_upper;
                }
                const double rel = first > 0 ? r.ratio_upper / first : std::nan("");
                const double shell_rel = shell_first > 0 ? sh.ratio_upper / shell_first : std::nan("");
                worst = std::max(worst, rel);
                shell_worst = std::max(shell_worst, shell_rel);
                csv.row({delta, r.H, r.N_upper, r.N_lower, r.ratio_upper, r.ratio_lower, rel, r.pairs, sh.N_upper,
                         sh.ratio_upper, shell_rel});
                io::json j;
                j["record"] = "count";
                j["delta"] = delta;
                j["H"] = r.H;
                j["v"] = r.v;
                j["N_upper"] = r.N_upper;
                j["N_lower"] = r.N_lower;
                j["ratio_upper"] = r.ratio_upper;
                j["ratio_lower"] = r.ratio_lower;
                j["ratio_vs_first"] = rel;
                j["pairs"] = r.pairs;
                j["shell_N_upper"] = sh.N_upper;
                j["shell_N_lower"] = sh.N_lower;
                j["shell_ratio_upper"] = sh.ratio_upper;
                j["shell_ratio_vs_first"] = shell_rel;
                w.write(j);
            }
            const bool pass = worst <= k.growth_factor;
            ok = ok && pass;
            io::json p;
            p["delta"] = delta;
            p["max_ratio_vs_first"] = worst;
            p["shell_max_ratio_vs_first"] = shell_worst;
            p["pass"] = pass;
            per.push_back(p);
        }
        res.exit_code = ok ? exit_pass : exit_fail;
    } catch (const budget_error& e) {
        res.exit_code = detail::budget_exhausted(w, e, res.summary);
    }
    res.summary["per_delta"] = per;
    res.summary["growth_factor"] = k.growth_factor;
    res.summary["pass"] = res.exit_code == exit_pass;
    io::json s = res.summary;
    s["record"] = "summary";
    w.write(s);
    return res;
}

// ---------------------------------------------------------------- construct

inline CommandResult cmd_construct(const ExperimentConfig& cfg, const RunOptions& run) {
    const auto& k = cfg.construct;
    if (k.xi && k.xi->empty()) throw config_error("construct: empty xi list");
    detail::prepare(run.out_dir);
    const io::Provenance prov{"construct", cfg.hash};
    const auto curve = make_curve(cfg.curve);
    const auto lambda = make_lambda(cfg.lambda);
    CommandResult res;
    const auto jl = run.out_dir / "construct.jsonl", cv = run.out_dir / "construct.csv";
    io::JsonlWriter w(jl, prov);
    io::json cfgrec = detail::curve_json(cfg);
    cfgrec["record"] = "config";
    w.write(cfgrec);
    io::CsvWriter csv(cv, prov,
                      {"Q", "samples", "exceptional", "attempted", "successes", "success_rate", "alt_successes",
                       "hypothesis_holds", "max_K1", "max_K2", "max_H_over_Q", "max_dist_Qn1"});
    res.files = {jl, cv};
    std::vector<double> xis;
    if (k.xi) {
        xis = *k.xi;
    } else {
        std::mt19937_64 rng(cfg.seed);
        for (int i = 0; i < k.samples; ++i) xis.push_back(cfg.curve.a + detail::uniform01(rng) * (cfg.curve.b - cfg.curve.a));
    }
    ConstructOptions opt;
    opt.delta = k.delta;
    opt.variant = k.variant == "all_terms" ? RhsVariant::all_terms : RhsVariant::as_printed;
    bool ok = true;
    io::json per = io::json::array();
    double K1_first = 0, K2_first = 0, K1_last = 0, K2_last = 0;
    for (std::size_t qi = 0; qi < k.Q.size(); ++qi) {
        const double Q = k.Q[qi];
        auto traces = parallel_map<ConstructionTrace>(xis.size(), run.workers, [&](std::size_t i) {
            return nearby_resonant(xis[i], curve, lambda, Q, opt);
        });
        std::uint64_t exc = 0, att = 0, succ = 0, alt = 0, hyp = 0;
        double mK1 = 0, mK2 = 0, mHQ = 0, mD = 0;
        for (const auto& tr : traces) {
            io::json j;
            j["record"] = "trace";
            j["Q"] = Q;
            j["xi"] = tr.xi;
            j["exceptional"] = tr.exceptional;
            if (!tr.exceptional) {
                ++att;
                succ += tr.success;
                alt += tr.alt_success;
                hyp += tr.loc.hypothesis;
                mK1 = std::max(mK1, tr.k.K1);
                mK2 = std::max(mK2, tr.k.K2);
                if (tr.success) {
                    mHQ = std::max(mHQ, static_cast<double>(tr.height) / Q);
                    mD = std::max(mD, tr.distance * std::pow(Q, curve.n() + 1));
                }
                j["C2"] = tr.vectors.C2;
                j["C2_apriori"] = tr.C2_apriori;
                j["vectors_exact"] = tr.vectors.exact;
                j["K1"] = tr.k.K1;
                j["K2"] = tr.k.K2;
                j["C3"] = tr.k.C3;
                j["C4"] = tr.k.C4;
                j["C7"] = tr.k.C7;
                j["eq10"] = tr.eq10_ok;
                j["eq12_value"] = tr.eq12_value_ok;
                j["eq12_derivative"] = tr.eq12_derivative_ok;
                j["eq12_height"] = tr.eq12_height_ok;
                j["hypothesis"] = tr.loc.hypothesis;
                if (tr.rounding.form) j["form"] = tr.rounding.form->coeffs();
                j["height"] = tr.height;
                j["alpha"] = tr.loc.alpha;
                j["distance"] = tr.distance;
                j["success"] = tr.success;
                j["alt_success"] = tr.alt_success;
            } else {
                ++exc;
            }
            j["failure"] = tr.failure;
            w.write(j);
        }
        const double rate = att ? static_cast<double>(succ) / static_cast<double>(att) : 0.0;
        ok = ok && rate >= k.min_success;
        if (qi == 0) {
            K1_first = mK1;
            K2_first = mK2;
        }
        K1_last = mK1;
        K2_last = mK2;
        csv.row({Q, static_cast<std::uint64_t>(xis.size()), exc, att, succ, rate, alt, hyp, mK1, mK2, mHQ, mD});
        io::json p;
        p["Q"] = Q;
        p["attempted"] = att;
        p["exceptional"] = exc;
        p["success_rate"] = rate;
        p["max_K1"] = mK1;
        p["max_K2"] = mK2;
        p["max_H_over_Q"] = mHQ;
        p["max_dist_Qn1"] = mD;
        per.push_back(p);
    }
    const bool bounded = K1_last <= k.growth_factor * K1_first && K2_last <= k.growth_factor * K2_first;
    ok = ok && bounded;
    res.exit_code = ok ? exit_pass : exit_fail;
    res.summary["per_Q"] = per;
    res.summary["bounded_constants"] = bounded;
    res.summary["min_success"] = k.min_success;
    res.summary["pass"] = ok;
    io::json s = res.summary;
    s["record"] = "summary";
    w.write(s);
    return res;
}

// ---------------------------------------------------------------- covers

inline CommandResult cmd_covers(const ExperimentConfig& cfg, const RunOptions& run) {
    detail::prepare(run.out_dir);
    const io::Provenance prov{"covers", cfg.hash};
    const auto curve = make_curve(cfg.curve);
    const auto lambda = make_lambda(cfg.lambda);
    const auto& k = cfg.covers;
    CommandResult res;
    const auto jl = run.out_dir / "covers.jsonl", cv = run.out_dir / "covers.csv",
               cl = run.out_dir / "classification.csv";
    io::JsonlWriter w(jl, prov);
    io::json cfgrec = detail::curve_json(cfg);
    cfgrec["record"] = "config";
    w.write(cfgrec);
    res.files = {jl, cv, cl};
    std::size_t total_violations = 0;
    try {
        {
            StageOptions so;
            so.budget = cfg.budget;
            so.workers = run.workers;
            so.keep_union = false;
            const auto stage = build_stage(curve, lambda, k.v, k.classify_t, so);
            ClassifyOptions co;
            co.workers = run.workers;
            const auto recs = classify(stage, k.epsilon, k.epsilon1, co);
            const auto s = summarize(recs, k.v, k.epsilon, k.epsilon1);
            io::CsvWriter csv(cl, prov, {"t", "class", "stratum", "delta", "pieces", "forms", "measure"});
            for (int c = 0; c < 3; ++c)
                csv.row({static_cast<std::int64_t>(k.classify_t), std::string(to_string(static_cast<FormClass>(c + 1))),
                         std::string(""), std::nan(""), s.piece_count[c], s.form_count[c], s.measure[c]});
            for (std::size_t i = 0; i < s.stratum_count.size(); ++i) {
                const bool star = i == s.ladder.deltas.size();
                csv.row({static_cast<std::int64_t>(k.classify_t), std::string("A2"),
                         star ? std::string("delta*") : std::to_string(i + 1), star ? 1.0 : s.ladder.deltas[i],
                         s.stratum_count[i], std::uint64_t{0}, s.stratum_measure[i]});
            }
            io::json j;
            j["record"] = "classification";
            j["t"] = k.classify_t;
            j["forms"] = stage.form_count;
            j["intervals"] = stage.interval_count;
            j["total_length"] = s.total;
            j["piece_count"] = s.piece_count;
            j["form_count"] = s.form_count;
            j["measure"] = s.measure;
            j["ladder"] = s.ladder.deltas;
            j["ladder_k"] = s.ladder.k;
            j["ladder_next"] = s.ladder.next;
            j["stratum_count"] = s.stratum_count;
            j["stratum_measure"] = s.stratum_measure;
            j["max_sliver"] = s.max_sliver;
            w.write(j);
        }
        io::CsvWriter csv(cv, prov,
                          {"t", "threshold_constant", "cells", "threshold", "a3_segments", "class_II", "points",
                           "lines", "planes", "violations", "beta_bound_fail"});
        StageOptions so;
        so.budget = cfg.budget;
        so.workers = run.workers;
        for (int t : k.t)
            for (double tc : k.threshold_constant) {
                const auto rep = cover_analysis(curve, lambda, k.v, t, k.epsilon1, tc, so);
                std::uint64_t beta_fail = 0;
                for (const auto& d : rep.cells) {
                    beta_fail += d.kind == IncidenceKind::line && !d.beta_bound_ok;
                    io::json j;
                    j["record"] = "cell";
                    j["t"] = t;
                    j["threshold_constant"] = tc;
                    j["cell"] = {d.cell.lo, d.cell.hi};
                    j["kind"] = to_string(d.kind);
                    j["N"] = d.N;
                    j["verified"] = d.verified;
                    if (d.kind == IncidenceKind::plane) {
                        j["plane"] = {d.A, d.B, d.C, d.D};
                        j["B_minus_Ax"] = d.B_minus_Ax;
                        j["C_minus_Af"] = d.C_minus_Af;
                        j["T"] = d.T;
                        j["bound_30"] = d.bound_30;
                        j["bound_32T"] = d.bound_32T;
                        j["bound_32A"] = d.bound_32A;
                    } else if (d.kind == IncidenceKind::line) {
                        j["alpha"] = d.alpha;
                        j["beta"] = d.beta;
                        j["beta_bound"] = d.beta_bound;
                        j["beta_bound_ok"] = d.beta_bound_ok;
                        j["K_beta2"] = d.K_beta2;
                    } else if (d.kind == IncidenceKind::violation) {
                        j["witness"] = d.witness;
                    }
                    w.write(j);
                }
                total_violations += rep.violations;
                csv.row({static_cast<std::int64_t>(t), tc, static_cast<std::uint64_t>(rep.partition.cells),
                         rep.partition.threshold, static_cast<std::uint64_t>(rep.segments),
                         static_cast<std::uint64_t>(rep.partition.class_II.size()),
                         static_cast<std::uint64_t>(rep.points), static_cast<std::uint64_t>(rep.lines),
                         static_cast<std::uint64_t>(rep.planes), static_cast<std::uint64_t>(rep.violations),
                         beta_fail});
                io::json r;
                r["t"] = t;
                r["threshold_constant"] = tc;
                r["class_II"] = rep.partition.class_II.size();
                r["violations"] = rep.violations;
                res.summary["runs"].push_back(r);
            }
        res.exit_code = total_violations == 0 ? exit_pass : exit_fail;
    } catch (const budget_error& e) {
        res.exit_code = detail::budget_exhausted(w, e, res.summary);
    }
    res.summary["violations"] = total_violations;
    res.summary["pass"] = res.exit_code == exit_pass;
    io::json s = res.summary;
    s["record"] = "summary";
    w.write(s);
    return res;
}

// ---------------------------------------------------------------- divergence

inline CommandResult cmd_divergence(const ExperimentConfig& cfg, const RunOptions& run) {
    detail::prepare(run.out_dir);
    const io::Provenance prov{"divergence", cfg.hash};
    const auto& k = cfg.divergence;
    CommandResult res;
    const auto jl = run.out_dir / "divergence.jsonl", cv = run.out_dir / "divergence.csv";
    io::JsonlWriter w(jl, prov);
    io::CsvWriter csv(cv, prov, {"v", "s", "threshold", "expected", "empirical", "growth_ratio", "match"});
    res.files = {jl, cv};
    struct Case {
        ApproxFunction psi;
        double v;
        double s;
    };
    std::vector<Case> cases;
    if (!cfg.psi.table.empty()) {
        if (k.s.empty()) throw config_error("divergence: a psi table needs an explicit s list");
        const auto psi = make_psi(cfg.psi);
        for (double s : k.s) cases.push_back({psi, std::nan(""), s});
    } else {
        for (double v : k.v) {
            const double sigma = (k.n + 1) / (v + 1);
            for (double off : k.s_offsets) {
                const double s = sigma + off;
                if (s > 0 && s <= 1) cases.push_back({ApproxFunction::power(v), v, s});
            }
            for (double s : k.s) cases.push_back({ApproxFunction::power(v), v, s});
        }
    }
    if (cases.empty()) throw config_error("divergence: no (s, v) cases");
    auto out = parallel_map<DivergenceResult>(cases.size(), run.workers, [&](std::size_t i) {
        return divergence_diagnostic(cases[i].psi, cases[i].s, k.n, k.q_max);
    });
    std::size_t matches = 0, inconclusive = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& r = out[i];
        const bool match = r.has_exact ? r.empirical == r.verdict : r.empirical != Verdict::inconclusive;
        matches += match;
        inconclusive += r.empirical == Verdict::inconclusive;
        csv.row({cases[i].v, cases[i].s, r.threshold, std::string(to_string(r.verdict)),
                 std::string(to_string(r.empirical)), r.growth_ratio, match});
        io::json j;
        j["record"] = "case";
        j["v"] = cases[i].v;
        j["s"] = cases[i].s;
        j["n"] = k.n;
        j["threshold"] = r.threshold;
        j["expected"] = to_string(r.verdict);
        j["empirical"] = to_string(r.empirical);
        j["growth_ratio"] = r.growth_ratio;
        j["partial_sum_last"] = r.partial_sums.back();
        j["match"] = match;
        w.write(j);
    }
    res.exit_code = matches == cases.size() ? exit_pass : exit_fail;
    res.summary["cases"] = cases.size();
    res.summary["matches"] = matches;
    res.summary["inconclusive"] = inconclusive;
    res.summary["pass"] = res.exit_code == exit_pass;
    io::json s = res.summary;
    s["record"] = "summary";
    w.write(s);
    return res;
}

using Command = std::function<CommandResult(const ExperimentConfig&, const RunOptions&)>;

inline const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"ubiquity", cmd_ubiquity}, {"dimension", cmd_dimension}, {"count", cmd_count},
        {"construct", cmd_construct}, {"covers", cmd_covers},     {"divergence", cmd_divergence}};
    return table;
}

} // namespace inhomo::cli
