#pragma once

// Planar convex-body kernels on counterclockwise vertex chains.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "covrec/errors.hpp"

namespace covrec {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Counterclockwise rotation by 90 degrees.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Unit vector in the plane.
class Direction {
public:
    Direction() = default;

    explicit Direction(Vec2 v) {
        const double len = norm(v);
        if (!(len > 0.0) || !std::isfinite(len)) {
            throw DegenerateInput("direction from a zero or non-finite vector");
        }
        v_ = v / len;
    }

    static Direction from_angle(double theta) {
        Direction d;
        d.v_ = {std::cos(theta), std::sin(theta)};
        return d;
    }

    /// Takes `v` as is when it is already unit within 1e-12, so stored
    /// directions reload bit for bit; otherwise normalizes.
    static Direction from_unit(Vec2 v) {
        if (std::abs(norm(v) - 1.0) > 1e-12) return Direction(v);
        Direction d;
        d.v_ = v;
        return d;
    }

    Vec2 vec() const { return v_; }
    double x() const { return v_.x; }
    double y() const { return v_.y; }
    /// Polar angle in [0, 2pi).
    double angle() const {
        double a = std::atan2(v_.y, v_.x);
        if (a < 0.0) a += 2.0 * std::numbers::pi;
        return a;
    }
    Direction operator-() const {
        Direction d;
        d.v_ = -v_;
        return d;
    }

private:
    Vec2 v_{1.0, 0.0};
};

/// `count` directions equally spaced over the half circle [0, pi).
inline std::vector<Direction> equally_spaced_directions(int count) {
    std::vector<Direction> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        out.push_back(Direction::from_angle(std::numbers::pi * i / count));
    }
    return out;
}

namespace detail {

constexpr double kDuplicateTol = 1e-13;
constexpr double kCollinearSin = 1e-12;
constexpr double kReflexSin = 1e-9;

inline double signed_area(std::span<const Vec2> v) {
    if (v.size() < 3) return 0.0;
    const Vec2 o = v[0];
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += cross(v[i] - o, v[i + 1] - o);
    return 0.5 * s;
}

// Drops duplicate and collinear vertices and orients the chain counterclockwise.
// With `strict`, a reflex turn beyond rounding level is reported as an error.
inline std::vector<Vec2> normalize_chain(std::vector<Vec2> v, bool strict) {
    auto drop_duplicates = [](std::vector<Vec2>& pts) {
        std::vector<Vec2> out;
        out.reserve(pts.size());
        for (const Vec2& p : pts) {
            if (out.empty() || norm(p - out.back()) > kDuplicateTol) out.push_back(p);
        }
        while (out.size() > 1 && norm(out.front() - out.back()) <= kDuplicateTol) out.pop_back();
        pts = std::move(out);
    };
    drop_duplicates(v);
    if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());

    bool changed = true;
    while (changed && v.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < v.size() && v.size() >= 3; ++i) {
            const Vec2 prev = v[(i + v.size() - 1) % v.size()];
            const Vec2 cur = v[i];
            const Vec2 next = v[(i + 1) % v.size()];
            const Vec2 e1 = cur - prev;
            const Vec2 e2 = next - cur;
            const double scale = norm(e1) * norm(e2);
            const double c = cross(e1, e2);
            if (c <= kCollinearSin * scale) {
                if (strict && c < -kReflexSin * scale) {
                    throw DegenerateInput("vertex chain is not convex");
                }
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    if (v.size() == 3 && std::abs(signed_area(v)) == 0.0) v.pop_back();
    return v;
}

}  // namespace detail

/// Convex polygon stored as a counterclockwise vertex chain. Zero vertices is
/// the empty polygon; one or two vertices occur only as degenerate
/// intersection results.
class Polygon {
public:
    Polygon() = default;

    /// Builds a polygon from a convex chain in either orientation. Collinear
    /// and duplicate vertices are merged; a reflex chain is rejected.
    static Polygon from_vertices(std::vector<Vec2> vertices) {
        Polygon p;
        p.v_ = detail::normalize_chain(std::move(vertices), true);
        return p;
    }

    /// Same as from_vertices, but rounding-level reflex turns are dropped
    /// silently. Used for results of clipping.
    static Polygon from_clipped(std::vector<Vec2> vertices) {
        Polygon p;
        p.v_ = detail::normalize_chain(std::move(vertices), false);
        return p;
    }

    const std::vector<Vec2>& vertices() const { return v_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }
    bool is_degenerate() const { return v_.size() < 3; }
    const Vec2& operator[](std::size_t i) const { return v_[i]; }

    Polygon translated(Vec2 t) const {
        Polygon p = *this;
        for (Vec2& q : p.v_) q += t;
        return p;
    }

    Polygon scaled(double s) const {
        Polygon p = *this;
        for (Vec2& q : p.v_) q = q * s;
        if (s < 0.0) std::reverse(p.v_.begin(), p.v_.end());
        return p;
    }

    /// The reflection -P in the origin.
    Polygon reflected() const {
        Polygon p = *this;
        for (Vec2& q : p.v_) q = -q;
        return p;
    }

private:
    std::vector<Vec2> v_;
};

/// The unit box C0 = [-1/2, 1/2]^2.
inline Polygon unit_box() {
    return Polygon::from_vertices({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
}

inline double area(const Polygon& p) { return detail::signed_area(p.vertices()); }

inline double perimeter(const Polygon& p) {
    const auto& v = p.vertices();
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += norm(v[(i + 1) % v.size()] - v[i]);
    return s;
}

/// Convex hull by monotone chain; collinear points are discarded.
inline Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return Polygon::from_clipped(pts);
    std::vector<Vec2> h(2 * pts.size());
    std::size_t n = 0;
    for (const Vec2& p : pts) {
        while (n >= 2 && cross(h[n - 1] - h[n - 2], p - h[n - 2]) <= 0.0) --n;
        h[n++] = p;
    }
    const std::size_t lower = n + 1;
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        while (n >= lower && cross(h[n - 1] - h[n - 2], pts[i] - h[n - 2]) <= 0.0) --n;
        h[n++] = pts[i];
    }
    h.resize(n - 1);
    return Polygon::from_clipped(std::move(h));
}

namespace detail {

// Sutherland-Hodgman clip of `subject` by the counterclockwise convex `clip`.
inline std::vector<Vec2> clip_chain(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
    std::vector<Vec2> next;
    const std::size_t m = clip.size();
    for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
        const Vec2 a = clip[e];
        const Vec2 ab = clip[(e + 1) % m] - a;
        next.clear();
        const std::size_t n = subject.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = subject[i];
            const Vec2 q = subject[(i + 1) % n];
            const double dp = cross(ab, p - a);
            const double dq = cross(ab, q - a);
            if (dp >= 0.0) next.push_back(p);
            if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
                const double t = dp / (dp - dq);
                next.push_back(p + (q - p) * t);
            }
            if (n == 1) break;
        }
        subject.swap(next);
    }
    return subject;
}

}  // namespace detail

/// P intersected with Q. Touching bodies give a degenerate (area 0) result;
/// disjoint bodies give the empty polygon.
inline Polygon intersect_convex(const Polygon& p, const Polygon& q) {
    if (p.empty() || q.empty()) return {};
    if (!q.is_degenerate()) {
        return Polygon::from_clipped(detail::clip_chain(p.vertices(), q.vertices()));
    }
    if (!p.is_degenerate()) {
        return Polygon::from_clipped(detail::clip_chain(q.vertices(), p.vertices()));
    }
    // Both are points or segments.
    const auto& a = p.vertices();
    const auto& b = q.vertices();
    auto on_segment = [](Vec2 x, Vec2 s0, Vec2 s1) {
        const Vec2 d = s1 - s0;
        const double len = norm(d);
        if (len == 0.0) return norm(x - s0) <= detail::kDuplicateTol;
        if (std::abs(cross(d, x - s0)) > detail::kDuplicateTol * len) return false;
        const double t = dot(x - s0, d) / (len * len);
        return t >= -1e-15 && t <= 1.0 + 1e-15;
    };
    std::vector<Vec2> hits;
    const Vec2 a1 = a.size() == 2 ? a[1] : a[0];
    const Vec2 b1 = b.size() == 2 ? b[1] : b[0];
    for (const Vec2& x : a) {
        if (on_segment(x, b[0], b1)) hits.push_back(x);
    }
    for (const Vec2& x : b) {
        if (on_segment(x, a[0], a1)) hits.push_back(x);
    }
    return convex_hull(std::move(hits));
}

struct PolygonMetrics {
    double area = 0.0;
    Vec2 centroid;
};

/// Shoelace area and area-weighted centroid.
inline PolygonMetrics polygon_metrics(const Polygon& p) {
    const auto& v = p.vertices();
    if (v.size() < 3) throw DegenerateInput("centroid of an empty or degenerate polygon");
    const Vec2 o = v[0];
    double a2 = 0.0;
    Vec2 c;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const Vec2 e1 = v[i] - o;
        const Vec2 e2 = v[i + 1] - o;
        const double w = cross(e1, e2);
        a2 += w;
        c += (e1 + e2) * w;
    }
    if (!(a2 > 0.0)) throw DegenerateInput("centroid of a zero-area polygon");
    return {0.5 * a2, o + c / (3.0 * a2)};
}

/// The translate of P with centroid at the origin.
inline Polygon centered(const Polygon& p) { return p.translated(-polygon_metrics(p).centroid); }

inline double support_function(const Polygon& p, Direction u) {
    if (p.empty()) throw DegenerateInput("support function of the empty polygon");
    double h = -std::numeric_limits<double>::infinity();
    for (const Vec2& v : p.vertices()) h = std::max(h, dot(u.vec(), v));
    return h;
}

/// Length of the orthogonal projection of P onto the line u^perp.
inline double projection_width(const Polygon& p, Direction u) {
    if (p.empty()) throw DegenerateInput("projection of the empty polygon");
    const Vec2 t = perp(u.vec());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec2& v : p.vertices()) {
        lo = std::min(lo, dot(t, v));
        hi = std::max(hi, dot(t, v));
    }
    return hi - lo;
}

/// Discrete surface area measure: one atom per edge in 2D.
struct SurfaceAreaMeasure {
    struct Atom {
        Direction normal;
        double mass = 0.0;
    };
    std::vector<Atom> atoms;

    double total_mass() const {
        double s = 0.0;
        for (const Atom& a : atoms) s += a.mass;
        return s;
    }
    /// |sum of mass * normal|.
    double imbalance() const {
        Vec2 s;
        for (const Atom& a : atoms) s += a.normal.vec() * a.mass;
        return norm(s);
    }
    bool balanced(double tol = 1e-10) const { return imbalance() <= tol; }
};

inline SurfaceAreaMeasure surface_area_measure(const Polygon& p) {
    if (p.is_degenerate() || !(area(p) > 0.0)) {
        throw DegenerateInput("surface area measure of a degenerate polygon");
    }
    SurfaceAreaMeasure m;
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e = v[(i + 1) % v.size()] - v[i];
        m.atoms.push_back({Direction(Vec2{e.y, -e.x}), norm(e)});
    }
    return m;
}

/// Cauchy projection formula: half the sum of |u . normal| * mass.
inline double brightness(const Polygon& p, Direction u) {
    if (p.is_degenerate() || !(area(p) > 0.0)) throw DegenerateInput("brightness of a degenerate polygon");
    double s = 0.0;
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e = v[(i + 1) % v.size()] - v[i];
        // |u . n| * |e| with n the unit outward normal equals |u x e|.
        s += std::abs(cross(u.vec(), e));
    }
    return 0.5 * s;
}

namespace detail {

// Sorts atoms by normal angle and merges normals closer than `angle_tol`.
inline std::vector<SurfaceAreaMeasure::Atom> merged_atoms(const SurfaceAreaMeasure& m, double angle_tol) {
    std::vector<std::pair<double, SurfaceAreaMeasure::Atom>> sorted;
    for (const auto& a : m.atoms) {
        if (a.mass < 0.0) throw InfeasibleMeasure("negative atom mass");
        if (a.mass > 0.0) sorted.push_back({a.normal.angle(), a});
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<double, SurfaceAreaMeasure::Atom>> out;
    for (const auto& s : sorted) {
        if (!out.empty() && s.first - out.back().first <= angle_tol) {
            auto& b = out.back().second;
            const Vec2 sum = b.normal.vec() * b.mass + s.second.normal.vec() * s.second.mass;
            b.mass += s.second.mass;
            b.normal = Direction(sum);
            continue;
        }
        out.push_back(s);
    }
    // Wrap-around merge between the last and the first atom.
    if (out.size() >= 2 && out.front().first + 2.0 * std::numbers::pi - out.back().first <= angle_tol) {
        auto& f = out.front().second;
        const auto& l = out.back().second;
        const Vec2 sum = f.normal.vec() * f.mass + l.normal.vec() * l.mass;
        f.mass += l.mass;
        f.normal = Direction(sum);
        out.pop_back();
    }
    std::vector<SurfaceAreaMeasure::Atom> atoms;
    atoms.reserve(out.size());
    for (auto& s : out) atoms.push_back(s.second);
    return atoms;
}

}  // namespace detail

/// Solves the planar Minkowski problem: the convex polygon, centroid at the
/// origin, whose edges have the given outer normals and lengths.
inline Polygon minkowski_reconstruct(const SurfaceAreaMeasure& m) {
    const auto atoms = detail::merged_atoms(m, 1e-12);
    if (atoms.size() < 3) throw InfeasibleMeasure("fewer than 3 atoms with positive mass");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double a = atoms[i].normal.angle();
        const double b = i + 1 < atoms.size() ? atoms[i + 1].normal.angle()
                                              : atoms[0].normal.angle() + 2.0 * std::numbers::pi;
        if (b - a >= std::numbers::pi) throw InfeasibleMeasure("normals lie in a closed half-plane");
    }
    SurfaceAreaMeasure merged{atoms};
    if (merged.imbalance() > 1e-8) throw InfeasibleMeasure("measure is not balanced");

    std::vector<Vec2> verts;
    verts.reserve(atoms.size());
    Vec2 cur;
    for (const auto& a : atoms) {
        verts.push_back(cur);
        cur += perp(a.normal.vec()) * a.mass;
    }
    return centered(Polygon::from_clipped(std::move(verts)));
}

/// DK = K + (-K).
inline Polygon difference_body(const Polygon& p) {
    std::vector<Vec2> pts;
    const auto& v = p.vertices();
    pts.reserve(v.size() * v.size());
    for (const Vec2& a : v) {
        for (const Vec2& b : v) pts.push_back(a - b);
    }
    return convex_hull(std::move(pts));
}

/// The o-symmetric body whose surface area measure is the average of those of
/// P and -P. Antipodal normals within 1e-9 rad are merged.
inline Polygon blaschke_body(const Polygon& p) {
    const SurfaceAreaMeasure s = surface_area_measure(p);
    SurfaceAreaMeasure sym;
    for (const auto& a : s.atoms) {
        sym.atoms.push_back({a.normal, 0.5 * a.mass});
        sym.atoms.push_back({-a.normal, 0.5 * a.mass});
    }
    SurfaceAreaMeasure merged{detail::merged_atoms(sym, 1e-9)};
    return minkowski_reconstruct(merged);
}

namespace detail {

inline void edge_normal_angles(const Polygon& p, std::vector<double>& out) {
    const auto& v = p.vertices();
    if (v.size() < 2) return;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e = v[(i + 1) % v.size()] - v[i];
        if (norm(e) == 0.0) continue;
        out.push_back(Direction(Vec2{e.y, -e.x}).angle());
    }
}

inline Vec2 support_vertex(const Polygon& p, Vec2 u) {
    const auto& v = p.vertices();
    std::size_t best = 0;
    double h = dot(u, v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double d = dot(u, v[i]);
        if (d > h) {
            h = d;
            best = i;
        }
    }
    return v[best];
}

}  // namespace detail

/// Hausdorff distance as the sup-norm distance of support functions. On each
/// arc between consecutive edge normals of P and Q both supporting vertices are
/// fixed, so the maximum of |u . (v_P - v_Q)| over the arc is found exactly.
inline double hausdorff_distance(const Polygon& p, const Polygon& q) {
    if (p.empty() || q.empty()) throw DegenerateInput("Hausdorff distance with an empty polygon");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> breaks{0.0};
    detail::edge_normal_angles(p, breaks);
    detail::edge_normal_angles(q, breaks);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double best = 0.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = i + 1 < breaks.size() ? breaks[i + 1] : breaks[0] + two_pi;
        const double mid = 0.5 * (a + b);
        const Vec2 um{std::cos(mid), std::sin(mid)};
        const Vec2 w = detail::support_vertex(p, um) - detail::support_vertex(q, um);
        auto value = [&](double t) { return std::abs(w.x * std::cos(t) + w.y * std::sin(t)); };
        best = std::max({best, value(a), value(b)});
        const double len = norm(w);
        if (len > 0.0) {
            double phi = std::atan2(w.y, w.x);
            for (int s = 0; s < 2; ++s, phi += std::numbers::pi) {
                double t = std::fmod(phi - a, two_pi);
                if (t < 0.0) t += two_pi;
                if (t <= b - a) best = std::max(best, len);
            }
        }
    }
    return best;
}

/// Distance up to reflection in the origin: min(d(P, Q), d(-P, Q)).
inline double reflection_distance(const Polygon& p, const Polygon& q) {
    return std::min(hausdorff_distance(p, q), hausdorff_distance(p.reflected(), q));
}

}  // namespace covrec
