#pragma once

#include "errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace inhomo::io {

inline constexpr const char* artifact_version = "0.1.0";

using json = nlohmann::ordered_json;

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_double(double x, int digits) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

namespace detail {

inline void escape_json(std::string& out, const std::string& s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += static_cast<char>(c);
            }
        }
    }
    out += '"';
}

inline void dump(std::string& out, const json& j) {
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            escape_json(out, it.key());
            out += ':';
            dump(out, it.value());
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first) out += ',';
            first = false;
            dump(out, v);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        out += std::isfinite(x) ? format_double(x, 17) : "null";
        break;
    }
    case json::value_t::string: escape_json(out, j.get<std::string>()); break;
    default: out += j.dump();
    }
}

} // namespace detail

/// Compact JSON with every float at 17 significant digits; non-finite floats become null.
inline std::string dump17(const json& j) {
    std::string out;
    detail::dump(out, j);
    return out;
}

/// Provenance carried by every output file.
struct Provenance {
    std::string command;
    std::string config_hash;
};

class JsonlWriter {
public:
    JsonlWriter(const std::filesystem::path& path, const Provenance& p) : os_(path, std::ios::binary) {
        if (!os_) throw config_error("cannot open " + path.string());
        json h;
        h["record"] = "header";
        h["artifact"] = "inhomo";
        h["version"] = artifact_version;
        h["command"] = p.command;
        h["config_hash"] = p.config_hash;
        write(h);
    }
    void write(const json& j) { os_ << dump17(j) << '\n'; }

private:
    std::ofstream os_;
};

using Cell = std::variant<std::string, std::int64_t, std::uint64_t, double, bool>;

inline std::string csv_field(const Cell& c) {
    if (auto s = std::get_if<std::string>(&c)) {
        if (s->find_first_of(",\"\r\n") == std::string::npos) return *s;
        std::string q = "\"";
        for (char ch : *s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + '"';
    }
    if (auto i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (auto u = std::get_if<std::uint64_t>(&c)) return std::to_string(*u);
    if (auto b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    return format_double(std::get<double>(c), 6);
}

/// CSV table; the first line is a `#` comment with version and config hash.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Provenance& p, const std::vector<std::string>& columns)
        : os_(path, std::ios::binary), ncol_(columns.size()) {
        if (!os_) throw config_error("cannot open " + path.string());
        os_ << "# inhomo " << artifact_version << " command=" << p.command << " config_hash=" << p.config_hash
            << '\n';
        std::vector<Cell> head(columns.begin(), columns.end());
        row(head);
    }
    void row(const std::vector<Cell>& cells) {
        if (cells.size() != ncol_) throw invalid_input("csv row has the wrong number of fields");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_field(cells[i]);
        }
        os_ << '\n';
    }

private:
    std::ofstream os_;
    std::size_t ncol_;
};

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
    bool line = false;  ///< polyline instead of markers
};

/// Minimal SVG 1.1 log-log plot (base-2 axes).
inline void write_loglog_svg(const std::filesystem::path& path, const std::string& title,
                             const std::vector<PlotSeries>& series, const std::string& xlabel,
                             const std::string& ylabel, const Provenance& p) {
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0 && s.y[i] > 0)) continue;
            xmin = std::min(xmin, std::log2(s.x[i]));
            xmax = std::max(xmax, std::log2(s.x[i]));
            ymin = std::min(ymin, std::log2(s.y[i]));
            ymax = std::max(ymax, std::log2(s.y[i]));
        }
    if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
    if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
    const double W = 640, Hh = 480, ml = 70, mr = 150, mt = 40, mb = 60;
    auto X = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double ly) { return Hh - mb - (ly - ymin) / (ymax - ymin) * (Hh - mt - mb); };
    auto f = [](double v) { return format_double(v, 6); };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open " + path.string());
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<!-- inhomo " << artifact_version << " command=" << p.command << " config_hash=" << p.config_hash
       << " -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << Hh
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << Hh << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"24\" font-size=\"14\">" << esc(title) << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << Hh - mb << "\" x2=\"" << W - mr << "\" y2=\"" << Hh - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << Hh - mb
       << "\" stroke=\"black\"/>\n";
    for (int k = static_cast<int>(std::ceil(xmin)); k <= static_cast<int>(std::floor(xmax)); ++k)
        os << "<text x=\"" << f(X(k)) << "\" y=\"" << Hh - mb + 16 << "\" text-anchor=\"middle\">2^" << k
           << "</text>\n";
    const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 8));
    for (int k = static_cast<int>(std::ceil(ymin)); k <= static_cast<int>(std::floor(ymax)); k += ystep)
        os << "<text x=\"" << ml - 6 << "\" y=\"" << f(Y(k) + 4) << "\" text-anchor=\"end\">2^" << k << "</text>\n";
    os << "<text x=\"" << f((ml + W - mr) / 2) << "\" y=\"" << Hh - 16 << "\" text-anchor=\"middle\">" << esc(xlabel)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << f((mt + Hh - mb) / 2) << "\" transform=\"rotate(-90 16 " << f((mt + Hh - mb) / 2)
       << ")\" text-anchor=\"middle\">" << esc(ylabel) << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = colors[si % 6];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0 && s.y[i] > 0)) continue;
            const double px = X(std::log2(s.x[i])), py = Y(std::log2(s.y[i]));
            if (s.line) {
                pts += f(px) + "," + f(py) + " ";
            } else {
                os << "<circle cx=\"" << f(px) << "\" cy=\"" << f(py) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
            }
        }
        if (s.line && !pts.empty())
            os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << col << "\"/>\n";
        os << "<text x=\"" << W - mr + 10 << "\" y=\"" << mt + 16 * (si + 1) << "\" fill=\"" << col << "\">"
           << esc(s.name) << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace inhomo::io
