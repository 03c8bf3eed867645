#pragma once

// File formats: JSON for bodies, measurement sets, reports and experiment
// configs; CSV for experiment tables; SVG for figures. Numbers are written as
// shortest round-trip decimals, so every file reloads bit for bit and reruns
// produce byte-identical output.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "covrec/bodies.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"
#include "covrec/measurement.hpp"
#include "covrec/pipelines.hpp"

namespace covrec::io {

using json = nlohmann::json;

inline constexpr const char* body_schema = "body/1";
inline constexpr const char* measurement_schema = "meas/1";
inline constexpr const char* report_schema = "report/1";

// ---------------------------------------------------------------- files

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream s;
    s << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path + "'");
    return s.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("error while writing '" + path + "'");
}

inline json read_json(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_json(const std::string& path, const json& j) { write_text(path, dump(j)); }

// ---------------------------------------------------------------- helpers

namespace detail {

inline void require_schema(const json& j, const char* schema) {
    if (!j.is_object() || !j.contains("schema") || j["schema"] != schema) {
        throw IoError(std::string("expected a ") + schema + " document");
    }
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError(std::string("field '") + key + "' has the wrong type: " + e.what());
    }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return field<T>(j, key);
}

inline json optional_number(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

inline json points(const std::vector<Vec2>& v) {
    json a = json::array();
    for (const Vec2& p : v) a.push_back({p.x, p.y});
    return a;
}

inline std::vector<Vec2> points_from(const json& a) {
    if (!a.is_array()) throw IoError("vertex list must be an array of [x, y] pairs");
    std::vector<Vec2> v;
    for (const json& p : a) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw IoError("vertex list must be an array of [x, y] pairs");
        }
        v.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return v;
}

}  // namespace detail

/// Shortest decimal that reads back to the same double; inf and nan spelled out.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- bodies

inline json body_to_json(const Polygon& p) {
    return {{"schema", body_schema}, {"vertices", detail::points(p.vertices())}};
}

/// Reads a body document; the polygon must be convex, non-degenerate and
/// inside C0.
inline Polygon body_from_json(const json& j) {
    detail::require_schema(j, body_schema);
    Polygon p = Polygon::from_vertices(detail::points_from(j.at("vertices")));
    if (p.is_degenerate()) throw DegenerateInput("body has fewer than three vertices");
    require_in_unit_box(p);
    return p;
}

inline Polygon load_body(const std::string& path) { return body_from_json(read_json(path)); }

/// A body from a shape description:
///   {"shape": "square"}
///   {"shape": "mgon", "m": 5, "scale": 0.48}
///   {"shape": "random", "vertices": 7, "seed": 3}
///   {"shape": "ellipse", "a": 0.4, "b": 0.25, "segments": 64}
inline Polygon body_from_shape(const json& j) {
    const auto shape = detail::field<std::string>(j, "shape");
    if (shape == "square") return square_body();
    if (shape == "mgon") {
        return regular_polygon(detail::field<int>(j, "m"), detail::optional_field<double>(j, "scale").value_or(0.48));
    }
    if (shape == "random") {
        return random_polygon(detail::field<int>(j, "vertices"),
                              detail::optional_field<std::uint64_t>(j, "seed").value_or(0));
    }
    if (shape == "ellipse") {
        return ellipse_polygon(detail::field<double>(j, "a"), detail::field<double>(j, "b"),
                               detail::optional_field<int>(j, "segments").value_or(64));
    }
    throw ConfigurationError("unknown shape '" + shape + "'");
}

// ---------------------------------------------------------------- measurements

inline json noise_to_json(const NoiseModel& n) {
    return {{"kind", to_string(n.kind)}, {"sigma", n.sigma}, {"scale", n.scale}};
}

inline NoiseModel noise_from_json(const json& j) {
    NoiseModel n;
    n.kind = noise_kind_from_string(detail::field<std::string>(j, "kind"));
    n.sigma = detail::optional_field<double>(j, "sigma").value_or(0.0);
    n.scale = detail::optional_field<double>(j, "scale").value_or(1e4);
    n.validate();
    return n;
}

/// Index order of "values" is that of MeasurementSet: the grid row-major,
/// (direction, repetition, probe) lexicographic, half-lattice lexicographic.
inline json measurement_to_json(const MeasurementSet& ms) {
    json dirs = json::array();
    for (const Direction& d : ms.directions) dirs.push_back({d.x(), d.y()});
    return {{"schema", measurement_schema},
            {"design", to_string(ms.design)},
            {"k", ms.k},
            {"gamma", ms.gamma ? json(*ms.gamma) : json(nullptr)},
            {"noise", noise_to_json(ms.noise)},
            {"seed", ms.seed},
            {"directions", std::move(dirs)},
            {"values", ms.values}};
}

inline MeasurementSet measurement_from_json(const json& j) {
    detail::require_schema(j, measurement_schema);
    MeasurementSet ms;
    ms.design = design_from_string(detail::field<std::string>(j, "design"));
    ms.k = detail::field<int>(j, "k");
    ms.gamma = detail::optional_field<double>(j, "gamma");
    ms.noise = j.contains("noise") ? noise_from_json(j["noise"]) : NoiseModel{};
    ms.seed = detail::field<std::uint64_t>(j, "seed");
    if (j.contains("directions")) {
        for (const Vec2& v : detail::points_from(j["directions"])) ms.directions.push_back(Direction::from_unit(v));
    }
    ms.values = detail::field<std::vector<double>>(j, "values");
    ms.validate();
    return ms;
}

inline MeasurementSet load_measurements(const std::string& path) { return measurement_from_json(read_json(path)); }

// ---------------------------------------------------------------- reports

inline json diagnostics_to_json(const StageDiagnostics& d) {
    return {{"fit_objective", d.fit_objective},
            {"fit_evaluations", d.fit_evaluations},
            {"restarts", d.restarts},
            {"converged", d.converged},
            {"directions", d.directions},
            {"kernel_epsilon", detail::optional_number(d.kernel_epsilon)},
            {"kernel_delta", detail::optional_number(d.kernel_delta)},
            {"schedule_check", detail::optional_number(d.schedule_check)},
            {"h_k", detail::optional_number(d.h_k)},
            {"gamma", detail::optional_number(d.gamma)},
            {"first_gamma", detail::optional_number(d.first_gamma)},
            {"synthesis_residual", detail::optional_number(d.synthesis_residual)},
            {"first_seed", d.first_seed},
            {"second_seed", d.second_seed}};
}

/// Wall time is left out so that reruns compare equal byte for byte.
inline json report_to_json(const ReconstructionReport& r) {
    return {{"schema", report_schema},
            {"problem", to_string(r.problem)},
            {"first_stage", to_string(r.first_stage)},
            {"k", r.k},
            {"polygon", detail::points(r.output.vertices())},
            {"q_k", detail::points(r.first_body.vertices())},
            {"error_to_truth", detail::optional_number(r.error_to_truth)},
            {"first_stage_error", detail::optional_number(r.first_stage_error)},
            {"diagnostics", diagnostics_to_json(r.diagnostics)}};
}

// ---------------------------------------------------------------- configs

/// Pipeline settings; every key is optional and defaults to PipelineConfig's.
inline PipelineConfig pipeline_from_json(const json& j) {
    using detail::optional_field;
    PipelineConfig c;
    if (!j.is_object()) throw IoError("pipeline settings must be an object");
    if (auto v = optional_field<std::string>(j, "problem")) c.problem = problem_from_string(*v);
    if (auto v = optional_field<std::string>(j, "first_stage")) c.first_stage = first_stage_from_string(*v);
    if (auto v = optional_field<int>(j, "k")) c.k = *v;
    if (auto v = optional_field<int>(j, "directions")) c.directions = *v;
    if (auto v = optional_field<double>(j, "gamma")) c.gamma = *v;
    c.first_gamma = optional_field<double>(j, "first_gamma");
    if (auto v = optional_field<double>(j, "epsilon")) c.epsilon = *v;
    if (auto v = optional_field<double>(j, "alpha")) c.alpha = *v;
    if (auto v = optional_field<bool>(j, "bernstein")) c.bernstein = *v;
    if (auto v = optional_field<std::string>(j, "kernel")) c.kernel = kernel_kind_from_string(*v);
    c.kernel_epsilon = optional_field<double>(j, "kernel_epsilon");
    c.kernel_delta = optional_field<double>(j, "kernel_delta");
    if (j.contains("noise")) c.noise = noise_from_json(j["noise"]);
    if (auto v = optional_field<std::uint64_t>(j, "seed")) c.seed = *v;
    if (auto v = optional_field<int>(j, "restarts")) c.fit.restarts = *v;
    if (auto v = optional_field<int>(j, "max_evaluations")) c.fit.max_evaluations = *v;
    if (auto v = optional_field<int>(j, "screening_evaluations")) c.fit.screening_evaluations = *v;
    if (auto v = optional_field<bool>(j, "first_stage_only")) c.first_stage_only = *v;
    return c;
}

struct ExperimentConfig {
    Polygon body;
    PipelineConfig pipeline;
    std::vector<int> ks;
    std::vector<std::uint64_t> seeds;
};

/// {"body": <path | body/1 object | shape object>, "pipeline": {...},
///  "ks": [...], "seeds": [...]}. A relative body path is taken relative to
/// `base_dir`.
inline ExperimentConfig experiment_from_json(const json& j, const std::string& base_dir = "") {
    if (!j.is_object()) throw IoError("experiment config must be an object");
    ExperimentConfig e;
    if (!j.contains("body")) throw IoError("experiment config lacks 'body'");
    const json& b = j["body"];
    if (b.is_string()) {
        std::string path = b.get<std::string>();
        if (!base_dir.empty() && !path.empty() && path.front() != '/') path = base_dir + "/" + path;
        e.body = load_body(path);
    } else if (b.is_object() && b.contains("schema")) {
        e.body = body_from_json(b);
    } else if (b.is_object() && b.contains("shape")) {
        e.body = body_from_shape(b);
    } else {
        throw IoError("'body' must be a path, a body/1 object or a shape object");
    }
    if (j.contains("pipeline")) e.pipeline = pipeline_from_json(j["pipeline"]);
    e.ks = detail::optional_field<std::vector<int>>(j, "ks").value_or(std::vector<int>{});
    e.seeds = detail::optional_field<std::vector<std::uint64_t>>(j, "seeds").value_or(std::vector<std::uint64_t>{});
    return e;
}

// ---------------------------------------------------------------- tables

inline std::string experiment_csv(const ExperimentTable& t) {
    const bool has_bound = std::any_of(t.rows.begin(), t.rows.end(), [](const auto& r) { return r.bound.has_value(); });
    std::string out = "k,seed,error,first_stage_error,objective,wall_ms";
    if (has_bound) out += ",bound,pass";
    out += "\n";
    for (const ExperimentRow& r : t.rows) {
        out += std::to_string(r.k) + "," + std::to_string(r.seed) + "," + format_number(r.error) + "," +
               format_number(r.first_stage_error) + "," + format_number(r.objective) + "," +
               format_number(std::round(r.wall_ms * 1000.0) / 1000.0);
        if (has_bound) {
            out += "," + (r.bound ? format_number(*r.bound) : std::string()) + "," +
                   (r.pass ? (*r.pass ? "true" : "false") : "");
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------- figures

namespace detail {

inline std::string fixed(double x, int digits = 3) {
    if (std::abs(x) < 0.5 * std::pow(10.0, -digits)) x = 0.0;  // no "-0.000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline std::string svg_polygon(const Polygon& p, double scale, double cx, double cy, const std::string& style) {
    std::string pts;
    for (const Vec2& v : p.vertices()) {
        if (!pts.empty()) pts += ' ';
        pts += fixed(cx + scale * v.x) + "," + fixed(cy - scale * v.y);
    }
    return "  <polygon points=\"" + pts + "\" " + style + "/>\n";
}

}  // namespace detail

struct OverlayOptions {
    bool ghost = true;         // also draw -P_k, dashed
    bool first_body = false;   // also draw Q_k, dotted
    int size = 480;            // pixels per side
};

/// Truth (black), P_k (red), optional -P_k ghost and Q_k, over the box C0.
inline std::string overlay_svg(const Polygon* truth, const ReconstructionReport& r, const OverlayOptions& o = {}) {
    const double size = o.size;
    // Q_k lives in 2 C0; the other outlines fit in C0 with a margin.
    const double half = o.first_body ? 1.05 : 0.6;
    const double scale = size / (2.0 * half), c = size / 2.0;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(o.size) + "\" height=\"" +
                    std::to_string(o.size) + "\" viewBox=\"0 0 " + std::to_string(o.size) + " " +
                    std::to_string(o.size) + "\">\n";
    s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += detail::svg_polygon(unit_box(), scale, c, c, "fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\"");
    if (o.first_body && !r.first_body.empty()) {
        s += detail::svg_polygon(r.first_body, scale, c, c,
                                 "fill=\"none\" stroke=\"#2a6fbb\" stroke-width=\"1\" stroke-dasharray=\"2,3\"");
    }
    if (truth) s += detail::svg_polygon(*truth, scale, c, c, "fill=\"none\" stroke=\"black\" stroke-width=\"2\"");
    if (!r.output.empty()) {
        if (o.ghost) {
            s += detail::svg_polygon(r.output.reflected(), scale, c, c,
                                     "fill=\"none\" stroke=\"#d62728\" stroke-opacity=\"0.4\" stroke-width=\"1.5\" "
                                     "stroke-dasharray=\"6,4\"");
        }
        s += detail::svg_polygon(r.output, scale, c, c, "fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"");
    }
    s += "</svg>\n";
    return s;
}

/// Log-log plot of the median error against k, with the rate bound when the
/// table has one. Returns an empty string when there is nothing to plot.
inline std::string error_plot_svg(const ExperimentTable& t) {
    struct Pt {
        double k, v;
    };
    std::vector<Pt> med, bound;
    for (const auto& [k, m] : t.medians) {
        if (std::isfinite(m) && m > 0.0) med.push_back({double(k), m});
    }
    for (const auto& [k, m] : t.medians) {
        for (const ExperimentRow& r : t.rows) {
            if (r.k == k && r.bound && *r.bound > 0.0) {
                bound.push_back({double(k), *r.bound});
                break;
            }
        }
    }
    if (med.empty() && bound.empty()) return {};

    double k0 = 1e300, k1 = 0.0, v0 = 1e300, v1 = 0.0;
    for (const auto* set : {&med, &bound}) {
        for (const Pt& p : *set) {
            k0 = std::min(k0, p.k);
            k1 = std::max(k1, p.k);
            v0 = std::min(v0, p.v);
            v1 = std::max(v1, p.v);
        }
    }
    double lk0 = std::log10(k0) - 0.1, lk1 = std::log10(k1) + 0.1;
    double lv0 = std::floor(std::log10(v0)), lv1 = std::ceil(std::log10(v1));
    if (lv1 <= lv0) lv1 = lv0 + 1.0;

    const double w = 560, h = 400, left = 70, right = 20, top = 20, bottom = 50;
    auto px = [&](double k) { return left + (std::log10(k) - lk0) / (lk1 - lk0) * (w - left - right); };
    auto py = [&](double v) { return h - bottom - (std::log10(v) - lv0) / (lv1 - lv0) * (h - top - bottom); };
    using detail::fixed;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"400\" viewBox=\"0 0 560 400\">\n";
    s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "  <g stroke=\"black\" stroke-width=\"1\">\n";
    s += "    <line x1=\"" + fixed(left) + "\" y1=\"" + fixed(h - bottom) + "\" x2=\"" + fixed(w - right) + "\" y2=\"" +
         fixed(h - bottom) + "\"/>\n";
    s += "    <line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
         fixed(h - bottom) + "\"/>\n";
    s += "  </g>\n";
    s += "  <g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const auto& [k, m] : t.medians) {
        s += "    <text x=\"" + fixed(px(k)) + "\" y=\"" + fixed(h - bottom + 18) + "\" text-anchor=\"middle\">" +
             std::to_string(k) + "</text>\n";
    }
    for (int e = int(lv0); e <= int(lv1); ++e) {
        s += "    <text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(py(std::pow(10.0, e)) + 4) +
             "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
    }
    s += "    <text x=\"" + fixed((left + w - right) / 2) + "\" y=\"" + fixed(h - 10) +
         "\" text-anchor=\"middle\">k</text>\n";
    s += "    <text x=\"16\" y=\"" + fixed((top + h - bottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fixed((top + h - bottom) / 2) + ")\">median error</text>\n";
    s += "  </g>\n";

    auto series = [&](const std::vector<Pt>& pts, const std::string& stroke, const std::string& dash) {
        if (pts.empty()) return;
        std::string line;
        for (const Pt& p : pts) line += (line.empty() ? "" : " ") + fixed(px(p.k)) + "," + fixed(py(p.v));
        s += "  <polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"2\"" + dash +
             "/>\n";
        for (const Pt& p : pts) {
            s += "  <circle cx=\"" + fixed(px(p.k)) + "\" cy=\"" + fixed(py(p.v)) + "\" r=\"3\" fill=\"" + stroke +
                 "\"/>\n";
        }
    };
    series(bound, "#888888", " stroke-dasharray=\"6,4\"");
    series(med, "#d62728", "");
    s += "</svg>\n";
    return s;
}

}  // namespace covrec::io
