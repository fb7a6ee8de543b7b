#pragma once

#include "errors.hpp"
#include "funcspace.hpp"
#include "interval_set.hpp"
#include "io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace inhomo {

inline constexpr int config_schema_version = 1;

struct CurveSpec {
    std::string name = "parabola";
    int n = 2;  ///< veronese only
    double a = 0, b = 1;
};

struct LambdaSpec {
    std::string name = "zero";  ///< zero | constant | power
    double value = 0;           ///< constant
    int k = 3;                  ///< power
};

struct PsiSpec {
    std::optional<double> v;
    std::vector<std::pair<double, double>> table;  ///< (q, psi(q)), log-log interpolated
};

struct UbiquityBlock {
    int t_calibrate = 4;
    double target_ratio = 0.5;
    std::optional<double> kappa;
    std::vector<int> t_range{5, 6, 7, 8, 9};
    std::vector<Interval> intervals;  ///< empty: I itself
    int random_subintervals = 8;
    double min_length = 0.01, max_length = 0.25;
    double k_min = 0.1;
};

struct DimensionBlock {
    std::vector<double> v{3.0};
    int k_min = 6, k_max = 14;
    int max_stage = 10;
    double epsilon_class = 0.1;
    int window_exponent = -1;
    std::size_t windows = 0, min_windows = 1000, max_windows = 20000;
    double tolerance = 0.1;
    bool svolume = false;
    std::vector<int> svolume_t{5, 6, 7, 8, 9};
    std::vector<double> s_grid{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    bool survivor = false;
    std::vector<int> survivor_t{4, 5, 6, 7};
    int survivor_m = 3;
};

struct CountBlock {
    std::vector<std::int64_t> H{16, 32, 64, 128, 256};
    std::vector<double> delta{0.0, 0.5, 1.0};
    double v = 3;
    double growth_factor = 4;
};

struct ConstructBlock {
    std::vector<double> Q{16, 32, 64, 128};
    int samples = 100;
    std::optional<std::vector<double>> xi;
    double delta = 1e-2;
    std::string variant = "as_printed";
    double min_success = 0.9;
    double growth_factor = 2;
};

struct CoversBlock {
    std::vector<int> t{6, 7, 8};
    double v = 3;
    double epsilon = 0.1, epsilon1 = 0.05;
    std::vector<double> threshold_constant{0.5, 1.0, 2.0};
    int classify_t = 6;
};

struct DivergenceBlock {
    int n = 2;
    std::vector<double> v{2.5, 3, 4, 5, 9};
    std::vector<double> s_offsets{0.0, -0.05, 0.05, 0.1};
    std::vector<double> s;  ///< explicit s values (used with a psi table)
    double q_max = 1 << 20;
};

struct ExperimentConfig {
    int schema_version = config_schema_version;
    CurveSpec curve;
    LambdaSpec lambda;
    PsiSpec psi;
    std::uint64_t seed = 42;
    int workers = 1;
    std::uint64_t budget = default_form_budget;
    std::string out_dir = "out";
    UbiquityBlock ubiquity;
    DimensionBlock dimension;
    CountBlock count;
    ConstructBlock construct;
    CoversBlock covers;
    DivergenceBlock divergence;
    std::string hash;  ///< FNV-1a of the canonical config text
};

namespace detail {

using cjson = nlohmann::json;

inline void allow_keys(const cjson& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw config_error(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void get(const cjson& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(where + "." + key + ": " + e.what());
    }
}

inline std::vector<Interval> intervals_of(const cjson& j, const std::string& where) {
    std::vector<Interval> out;
    if (!j.is_array()) throw config_error(where + ": expected a list of [lo, hi]");
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw config_error(where + ": expected [lo, hi]");
        out.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return out;
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw config_error(msg);
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    using detail::cjson;
    cjson j;
    try {
        j = cjson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    detail::allow_keys(j, "config",
                       {"schema_version", "curve", "lambda", "psi", "seed", "workers", "budget", "output", "ubiquity",
                        "dimension", "count", "construct", "covers", "divergence"});
    ExperimentConfig c;
    if (!j.contains("schema_version")) throw config_error("config: missing schema_version");
    detail::get(j, "schema_version", c.schema_version, "config");
    if (c.schema_version != config_schema_version)
        throw config_error("config: unsupported schema_version " + std::to_string(c.schema_version));
    detail::get(j, "seed", c.seed, "config");
    detail::get(j, "workers", c.workers, "config");
    if (j.contains("budget")) {
        double b = 0;
        detail::get(j, "budget", b, "config");
        detail::require(b >= 1, "config.budget must be positive");
        c.budget = static_cast<std::uint64_t>(b);
    }
    detail::require(c.workers >= 1, "config.workers must be >= 1");
    if (j.contains("output")) {
        detail::allow_keys(j["output"], "output", {"dir"});
        detail::get(j["output"], "dir", c.out_dir, "output");
    }
    if (j.contains("curve")) {
        const auto& b = j["curve"];
        detail::allow_keys(b, "curve", {"name", "n", "a", "b"});
        detail::get(b, "name", c.curve.name, "curve");
        detail::get(b, "n", c.curve.n, "curve");
        detail::get(b, "a", c.curve.a, "curve");
        detail::get(b, "b", c.curve.b, "curve");
    }
    detail::require(c.curve.b > c.curve.a, "curve: need a < b");
    detail::require(c.curve.name == "parabola" || c.curve.name == "veronese" || c.curve.name == "cubic" ||
                        c.curve.name == "sine" || c.curve.name == "exp",
                    "curve: unknown name '" + c.curve.name + "'");
    if (j.contains("lambda")) {
        const auto& b = j["lambda"];
        detail::allow_keys(b, "lambda", {"name", "value", "k"});
        detail::get(b, "name", c.lambda.name, "lambda");
        detail::get(b, "value", c.lambda.value, "lambda");
        detail::get(b, "k", c.lambda.k, "lambda");
    }
    detail::require(c.lambda.name == "zero" || c.lambda.name == "constant" || c.lambda.name == "power",
                    "lambda: unknown name '" + c.lambda.name + "'");
    detail::require(c.lambda.name != "power" || (c.lambda.k >= 1 && c.lambda.k <= 10), "lambda.k must lie in [1, 10]");
    if (j.contains("psi")) {
        const auto& b = j["psi"];
        detail::allow_keys(b, "psi", {"v", "table"});
        if (b.contains("v")) {
            double v = 0;
            detail::get(b, "v", v, "psi");
            c.psi.v = v;
        }
        if (b.contains("table")) {
            for (const auto& iv : detail::intervals_of(b["table"], "psi.table")) c.psi.table.push_back({iv.lo, iv.hi});
            detail::require(c.psi.table.size() >= 2, "psi.table: need at least two points");
        }
        detail::require(c.psi.v.has_value() != !c.psi.table.empty(), "psi: give exactly one of v, table");
    }
    if (j.contains("ubiquity")) {
        const auto& b = j["ubiquity"];
        auto& u = c.ubiquity;
        detail::allow_keys(b, "ubiquity", {"t_calibrate", "target_ratio", "kappa", "t_range", "intervals",
                                           "random_subintervals", "min_length", "max_length", "k_min"});
        detail::get(b, "t_calibrate", u.t_calibrate, "ubiquity");
        detail::get(b, "target_ratio", u.target_ratio, "ubiquity");
        if (b.contains("kappa") && !b["kappa"].is_null()) {
            double k = 0;
            detail::get(b, "kappa", k, "ubiquity");
            u.kappa = k;
        }
        detail::get(b, "t_range", u.t_range, "ubiquity");
        if (b.contains("intervals")) u.intervals = detail::intervals_of(b["intervals"], "ubiquity.intervals");
        detail::get(b, "random_subintervals", u.random_subintervals, "ubiquity");
        detail::get(b, "min_length", u.min_length, "ubiquity");
        detail::get(b, "max_length", u.max_length, "ubiquity");
        detail::get(b, "k_min", u.k_min, "ubiquity");
        detail::require(!u.t_range.empty(), "ubiquity.t_range must not be empty");
        detail::require(u.target_ratio > 0 && u.target_ratio < 1, "ubiquity.target_ratio must lie in (0, 1)");
        detail::require(!u.kappa || *u.kappa > 0, "ubiquity.kappa must be positive");
        detail::require(u.random_subintervals >= 0, "ubiquity.random_subintervals must be >= 0");
        detail::require(u.min_length > 0 && u.max_length >= u.min_length &&
                            u.max_length <= c.curve.b - c.curve.a,
                        "ubiquity: need 0 < min_length <= max_length <= |I|");
    }
    if (j.contains("dimension")) {
        const auto& b = j["dimension"];
        auto& d = c.dimension;
        detail::allow_keys(b, "dimension", {"v", "k_range", "max_stage", "epsilon_class", "window_exponent",
                                            "windows", "min_windows", "max_windows", "tolerance", "svolume",
                                            "svolume_t", "s_grid", "survivor", "survivor_t", "survivor_m"});
        if (b.contains("v")) {
            if (b["v"].is_number()) d.v = {b["v"].get<double>()};
            else detail::get(b, "v", d.v, "dimension");
        }
        if (b.contains("k_range")) {
            std::vector<int> kr;
            detail::get(b, "k_range", kr, "dimension");
            detail::require(kr.size() == 2, "dimension.k_range must be [k_min, k_max]");
            d.k_min = kr[0];
            d.k_max = kr[1];
        }
        detail::get(b, "max_stage", d.max_stage, "dimension");
        detail::get(b, "epsilon_class", d.epsilon_class, "dimension");
        detail::get(b, "window_exponent", d.window_exponent, "dimension");
        detail::get(b, "windows", d.windows, "dimension");
        detail::get(b, "min_windows", d.min_windows, "dimension");
        detail::get(b, "max_windows", d.max_windows, "dimension");
        detail::get(b, "tolerance", d.tolerance, "dimension");
        detail::get(b, "svolume", d.svolume, "dimension");
        detail::get(b, "svolume_t", d.svolume_t, "dimension");
        detail::get(b, "s_grid", d.s_grid, "dimension");
        detail::get(b, "survivor", d.survivor, "dimension");
        detail::get(b, "survivor_t", d.survivor_t, "dimension");
        detail::get(b, "survivor_m", d.survivor_m, "dimension");
        detail::require(!d.v.empty(), "dimension.v must not be empty");
        for (double v : d.v) detail::require(v > 2, "dimension.v: every v must exceed 2");
        detail::require(d.k_max - d.k_min >= 2 && d.k_min >= 1 && d.k_max <= 30, "dimension.k_range invalid");
        detail::require(d.tolerance > 0, "dimension.tolerance must be positive");
        detail::require(d.max_windows >= d.min_windows && d.min_windows >= 1, "dimension: window limits invalid");
    }
    if (j.contains("count")) {
        const auto& b = j["count"];
        auto& k = c.count;
        detail::allow_keys(b, "count", {"H", "delta", "v", "growth_factor"});
        detail::get(b, "H", k.H, "count");
        detail::get(b, "delta", k.delta, "count");
        detail::get(b, "v", k.v, "count");
        detail::get(b, "growth_factor", k.growth_factor, "count");
        detail::require(!k.H.empty() && !k.delta.empty(), "count: H and delta must not be empty");
        for (auto H : k.H) detail::require(H >= 2, "count.H: every H must be >= 2");
        for (double d : k.delta) detail::require(d >= 0 && d <= 1, "count.delta must lie in [0, 1]");
        detail::require(k.v > 2, "count.v must exceed 2");
    }
    if (j.contains("construct")) {
        const auto& b = j["construct"];
        auto& k = c.construct;
        detail::allow_keys(b, "construct", {"Q", "samples", "xi", "delta", "variant", "min_success", "growth_factor"});
        detail::get(b, "Q", k.Q, "construct");
        detail::get(b, "samples", k.samples, "construct");
        if (b.contains("xi")) {
            std::vector<double> xs;
            detail::get(b, "xi", xs, "construct");
            k.xi = xs;
        }
        detail::get(b, "delta", k.delta, "construct");
        detail::get(b, "variant", k.variant, "construct");
        detail::get(b, "min_success", k.min_success, "construct");
        detail::get(b, "growth_factor", k.growth_factor, "construct");
        detail::require(!k.Q.empty(), "construct.Q must not be empty");
        if (k.xi) detail::require(!k.xi->empty(), "construct.xi must not be empty");
        else detail::require(k.samples > 0, "construct.samples must be positive");
        detail::require(k.variant == "as_printed" || k.variant == "all_terms",
                        "construct.variant must be as_printed or all_terms");
        detail::require(k.delta > 0 && k.delta < 1, "construct.delta must lie in (0, 1)");
    }
    if (j.contains("covers")) {
        const auto& b = j["covers"];
        auto& k = c.covers;
        detail::allow_keys(b, "covers", {"t", "v", "epsilon", "epsilon1", "threshold_constant", "classify_t"});
        detail::get(b, "t", k.t, "covers");
        detail::get(b, "v", k.v, "covers");
        detail::get(b, "epsilon", k.epsilon, "covers");
        detail::get(b, "epsilon1", k.epsilon1, "covers");
        detail::get(b, "threshold_constant", k.threshold_constant, "covers");
        detail::get(b, "classify_t", k.classify_t, "covers");
        detail::require(!k.t.empty(), "covers.t must not be empty");
        detail::require(k.epsilon > 0 && k.epsilon < 1, "covers.epsilon must lie in (0, 1)");
        detail::require(k.v > 2 + 3 * k.epsilon1 && k.epsilon1 > 0, "covers: need epsilon1 > 0 and v > 2 + 3*epsilon1");
        detail::require(!k.threshold_constant.empty(), "covers.threshold_constant must not be empty");
    }
    if (j.contains("divergence")) {
        const auto& b = j["divergence"];
        auto& k = c.divergence;
        detail::allow_keys(b, "divergence", {"n", "v", "s_offsets", "s", "q_max"});
        detail::get(b, "n", k.n, "divergence");
        detail::get(b, "v", k.v, "divergence");
        detail::get(b, "s_offsets", k.s_offsets, "divergence");
        detail::get(b, "s", k.s, "divergence");
        detail::get(b, "q_max", k.q_max, "divergence");
        detail::require(k.n >= 1, "divergence.n must be >= 1");
        detail::require(k.q_max >= 1024, "divergence.q_max must be >= 1024");
    }
    c.hash = io::hex64(io::fnv1a64(j.dump()));
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

inline CurveSystem make_curve(const CurveSpec& s) {
    if (s.name == "parabola") return curves::parabola(s.a, s.b);
    if (s.name == "veronese") return curves::veronese(s.n, s.a, s.b);
    if (s.name == "cubic") return curves::cubic(s.a, s.b);
    if (s.name == "sine") return curves::sine(s.a, s.b);
    if (s.name == "exp") return curves::exponential(s.a, s.b);
    throw config_error("unknown curve '" + s.name + "'");
}

inline InhomFunction make_lambda(const LambdaSpec& s) {
    if (s.name == "zero") return InhomFunction::zero();
    if (s.name == "constant") return InhomFunction::constant(s.value);
    if (s.name == "power") {
        if (s.k < 1 || s.k > 10) throw config_error("lambda.k must lie in [1, 10]");
        return InhomFunction::power(s.k);
    }
    throw config_error("unknown lambda '" + s.name + "'");
}

/// psi from a table: log-log linear interpolation, extended with the end slopes.
inline ApproxFunction make_psi(const PsiSpec& s) {
    if (s.v) return ApproxFunction::power(*s.v);
    if (s.table.empty()) throw config_error("psi: missing");
    auto tab = s.table;
    std::sort(tab.begin(), tab.end());
    for (const auto& [q, p] : tab)
        if (!(q >= 1 && p > 0)) throw config_error("psi.table: need q >= 1 and psi > 0");
    std::vector<double> lq, lp;
    for (const auto& [q, p] : tab) {
        lq.push_back(std::log(q));
        lp.push_back(std::log(p));
    }
    auto fn = [lq, lp](double q) {
        const double x = std::log(q);
        std::size_t i = std::upper_bound(lq.begin(), lq.end(), x) - lq.begin();
        i = std::clamp<std::size_t>(i, 1, lq.size() - 1);
        const double sl = (lp[i] - lp[i - 1]) / (lq[i] - lq[i - 1]);
        return std::exp(lp[i - 1] + sl * (x - lq[i - 1]));
    };
    return ApproxFunction::closure(fn, tab.front().first, std::max(tab.back().first, 2 * tab.front().first));
}

} // namespace inhomo
