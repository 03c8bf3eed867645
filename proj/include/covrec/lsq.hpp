#pragma once

// Least squares engines: the linear brightness fit that yields an o-symmetric
// first-stage polygon, and the nonlinear covariogram fit over facet masses.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/detail/parallel.hpp"
#include "covrec/errors.hpp"
#include "covrec/estimators.hpp"
#include "covrec/geometry.hpp"
#include "covrec/nnls.hpp"
#include "covrec/random.hpp"

namespace covrec {

/// Facet masses a_plus[j] at +u_j and a_minus[j] at -u_j.
struct FacetVariables {
    std::vector<Direction> normals;
    std::vector<double> a_plus;
    std::vector<double> a_minus;

    std::size_t size() const { return normals.size(); }

    /// |sum_j (a+_j - a-_j) u_j|.
    double imbalance() const {
        Vec2 s;
        for (std::size_t j = 0; j < normals.size(); ++j) s += normals[j].vec() * (a_plus[j] - a_minus[j]);
        return norm(s);
    }
    bool balanced(double tol = 1e-10) const { return imbalance() <= tol; }

    /// Swaps a+ and a-: the facet data of the reflected polygon.
    FacetVariables swapped() const { return {normals, a_minus, a_plus}; }

    // Flat layout (a+_0, a-_0, a+_1, a-_1, ...).
    Eigen::VectorXd flat() const {
        Eigen::VectorXd v(Eigen::Index(2 * size()));
        for (std::size_t j = 0; j < size(); ++j) {
            v(Eigen::Index(2 * j)) = a_plus[j];
            v(Eigen::Index(2 * j + 1)) = a_minus[j];
        }
        return v;
    }
    FacetVariables with(const Eigen::VectorXd& v) const {
        FacetVariables f{normals, std::vector<double>(size()), std::vector<double>(size())};
        for (std::size_t j = 0; j < size(); ++j) {
            f.a_plus[j] = v(Eigen::Index(2 * j));
            f.a_minus[j] = v(Eigen::Index(2 * j + 1));
        }
        return f;
    }
};

/// Euclidean projection onto {a >= 0, sum_j (a+_j - a-_j) u_j = o}. The dual
/// theta(l) = 1/2 sum_i max(0, a_i - b_i . l)^2, with b_i = +-u_j, is convex and
/// piecewise quadratic; semismooth Newton on it identifies the active set in
/// finitely many steps and a = max(0, a0 - B^T l) is then exact.
inline FacetVariables project_to_balanced_cone(const FacetVariables& f) {
    const std::size_t s = f.size();
    if (s < 2) throw ConfigurationError("balanced cone needs at least two normal pairs");
    bool spans = false;
    for (std::size_t j = 1; j < s && !spans; ++j) spans = std::abs(cross(f.normals[0].vec(), f.normals[j].vec())) > 1e-12;
    if (!spans) throw ConfigurationError("facet normals do not span the plane");

    const Eigen::VectorXd a0 = f.flat();
    const Eigen::Index m = a0.size();
    Eigen::MatrixXd bmat(2, m);
    for (std::size_t j = 0; j < s; ++j) {
        const Vec2 u = f.normals[j].vec();
        bmat(0, Eigen::Index(2 * j)) = u.x;
        bmat(1, Eigen::Index(2 * j)) = u.y;
        bmat(0, Eigen::Index(2 * j + 1)) = -u.x;
        bmat(1, Eigen::Index(2 * j + 1)) = -u.y;
    }
    auto primal = [&](const Eigen::Vector2d& l) { return (a0 - bmat.transpose() * l).cwiseMax(0.0).eval(); };
    auto theta = [&](const Eigen::Vector2d& l) { return 0.5 * primal(l).squaredNorm(); };

    const double scale = std::max(1.0, a0.cwiseAbs().maxCoeff());
    Eigen::Vector2d l = Eigen::Vector2d::Zero();
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd a = primal(l);
        const Eigen::Vector2d grad = -bmat * a;
        if (grad.norm() <= 1e-15 * scale) break;
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (a(i) > 0.0) h += bmat.col(i) * bmat.col(i).transpose();
        }
        // Newton step, damped towards steepest descent when the generalized
        // Hessian is singular; Armijo backtracking keeps it globally convergent.
        const double t0 = theta(l);
        bool moved = false;
        for (double tau = 1e-14 * (h.trace() + 1.0); tau < 1e8 && !moved; tau *= 1e3) {
            const Eigen::Vector2d step = -(h + tau * Eigen::Matrix2d::Identity()).ldlt().solve(grad);
            for (double t = 1.0; t > 1e-6; t *= 0.5) {
                if (theta(l + t * step) <= t0 + 1e-4 * t * grad.dot(step)) {
                    l += t * step;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) break;
    }
    return f.with(primal(l));
}

/// The polygon, centroid at the origin, with atoms (u_j, a+_j), (-u_j, a-_j);
/// zero-mass atoms are dropped.
inline Polygon polygon_from_facets(const FacetVariables& f) {
    SurfaceAreaMeasure m;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (f.a_plus[j] > 0.0) m.atoms.push_back({f.normals[j], f.a_plus[j]});
        if (f.a_minus[j] > 0.0) m.atoms.push_back({-f.normals[j], f.a_minus[j]});
    }
    return minkowski_reconstruct(m);
}

/// Fits an o-symmetric polygon to brightness samples: min over c >= 0 of
/// sum_i (y_i - 1/2 sum_j |u_i . v_j| c_j)^2, with candidate normal pairs +-v_j
/// the sample directions and each c_j split equally between +v_j and -v_j.
inline Polygon bright_lsq_fit(const std::vector<BrightnessSample>& samples) {
    std::vector<Direction> cand;
    for (const auto& s : samples) {
        bool dup = false;
        for (const auto& c : cand) dup = dup || std::abs(cross(c.vec(), s.direction.vec())) < 1e-12;
        if (!dup) cand.push_back(s.direction);
    }
    if (cand.size() < 2) throw ConfigurationError("brightness fit needs two nonparallel directions");

    Eigen::MatrixXd a(Eigen::Index(samples.size()), Eigen::Index(cand.size()));
    Eigen::VectorXd y(Eigen::Index(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        y(Eigen::Index(i)) = samples[i].value;
        for (std::size_t j = 0; j < cand.size(); ++j) {
            a(Eigen::Index(i), Eigen::Index(j)) = 0.5 * std::abs(dot(samples[i].direction.vec(), cand[j].vec()));
        }
    }
    const Eigen::VectorXd c = nnls(a, y);
    const double total = c.sum();
    if (!(total > 0.0)) throw ReconstructionFailure("bright_lsq", "brightness fit has no positive mass");
    SurfaceAreaMeasure m;
    for (std::size_t j = 0; j < cand.size(); ++j) {
        const double cj = c(Eigen::Index(j));
        if (cj <= 1e-8 * total) continue;
        m.atoms.push_back({cand[j], 0.5 * cj});
        m.atoms.push_back({-cand[j], 0.5 * cj});
    }
    try {
        return minkowski_reconstruct(m);
    } catch (const InfeasibleMeasure& e) {
        throw ReconstructionFailure("bright_lsq", e.what());
    }
}

struct FitOptions {
    int restarts = 32;
    int max_evaluations = 2000;     // for the restart that is carried to the end
    int screening_evaluations = 150;  // per restart in the screening round
    double relative_tolerance = 1e-10;
    std::uint64_t seed = 0;
};

struct FitReport {
    FacetVariables solution;
    double objective = 0.0;
    int iterations = 0;  // objective evaluations, summed over restarts
    int restarts = 0;
    bool converged = false;
    std::vector<double> initial_objectives;  // one per restart
};

namespace detail {

// Normal pairs of an o-symmetric polygon with the masses at +u and -u.
inline FacetVariables facets_of(const Polygon& q) {
    if (q.is_degenerate()) throw ConfigurationError("first-stage polygon is degenerate");
    const SurfaceAreaMeasure sm = surface_area_measure(q);
    FacetVariables f;
    for (const auto& atom : sm.atoms) {
        double ang = atom.normal.angle();
        const bool upper = ang < std::numbers::pi - 1e-9;
        const Direction u = upper ? atom.normal : -atom.normal;
        std::size_t j = 0;
        for (; j < f.size(); ++j) {
            if (std::abs(cross(f.normals[j].vec(), u.vec())) < 1e-9 && dot(f.normals[j].vec(), u.vec()) > 0.0) break;
        }
        if (j == f.size()) {
            f.normals.push_back(u);
            f.a_plus.push_back(0.0);
            f.a_minus.push_back(0.0);
        }
        (upper ? f.a_plus[j] : f.a_minus[j]) += atom.mass;
    }
    if (f.size() < 2) throw ConfigurationError("first-stage polygon has fewer than 4 facets");
    return f;
}

// Covariogram objective on the grid for B(a) = P(a) ∩ C0, with its Jacobian.
//
// B and B + x share one set of outer normals: the atom normals of P(a) plus
// the four box normals. Their intersection is therefore the half-plane
// intersection over that sorted normal set with offsets min(H_e, H_e + n_e . x),
// computed in linear time. The derivative of its area with respect to a
// binding offset is the length of the corresponding edge, and the offsets of
// P(a) are linear in a apart from the centroid shift.
class CovObjective {
public:
    explicit CovObjective(const SampleGrid& g) : grid_(g) {
        for (double v : g.values) total_ += v * v;
    }

    double total() const { return total_; }

    double operator()(const FacetVariables& f) const { return evaluate(f, nullptr).squaredNorm(); }

    // Residuals M_i - g(x_i) over the full grid; fills the Jacobian with
    // respect to the flat facet variables when `jac` is given.
    Eigen::VectorXd evaluate(const FacetVariables& f, Eigen::MatrixXd* jac) const {
        Eigen::MatrixXd half;
        const Eigen::VectorXd r = evaluate_half(f, jac ? &half : nullptr);
        if (jac) {
            const std::size_t c = grid_.center();
            jac->resize(r.size(), half.cols());
            for (std::size_t i = 0; i <= c; ++i) {
                jac->row(Eigen::Index(i)) = half.row(Eigen::Index(i));
                if (i != c) jac->row(Eigen::Index(grid_.negated(i))) = half.row(Eigen::Index(i));
            }
        }
        return r;
    }

    // Residuals together with the Gauss-Newton normal equations J^T J and
    // J^T r; sites x and -x share a Jacobian row.
    Eigen::VectorXd normal_equations(const FacetVariables& f, Eigen::MatrixXd& gram, Eigen::VectorXd& grad) const {
        Eigen::MatrixXd half;
        const Eigen::VectorXd r = evaluate_half(f, &half);
        const std::size_t c = grid_.center();
        Eigen::VectorXd paired(static_cast<Eigen::Index>(c + 1));
        Eigen::VectorXd weight(static_cast<Eigen::Index>(c + 1));
        for (std::size_t i = 0; i <= c; ++i) {
            const bool mid = i == c;
            paired(Eigen::Index(i)) = r(Eigen::Index(i)) + (mid ? 0.0 : r(Eigen::Index(grid_.negated(i))));
            weight(Eigen::Index(i)) = mid ? 1.0 : 2.0;
        }
        gram = half.transpose() * weight.asDiagonal() * half;
        grad = half.transpose() * paired;
        return r;
    }

private:
    Eigen::VectorXd evaluate_half(const FacetVariables& f, Eigen::MatrixXd* half) const {
        const std::size_t nsites = grid_.size();
        const std::size_t nvar = 2 * f.size();
        const std::size_t c = grid_.center();
        Eigen::VectorXd r(static_cast<Eigen::Index>(nsites));
        for (std::size_t i = 0; i < nsites; ++i) r(Eigen::Index(i)) = grid_.values[i];
        if (half) half->setZero(Eigen::Index(c + 1), Eigen::Index(nvar));

        Frame fr;
        if (!build_frame(f, fr)) return r;  // no body: g vanishes identically

        const std::size_t nplanes = fr.normals.size();
        Eigen::MatrixXd weights;  // edge lengths on P-facets, per site
        if (half) weights.setZero(Eigen::Index(c + 1), Eigen::Index(fr.atom_count));
        std::vector<double> offset(nplanes);
        std::vector<double> lengths;
        for (std::size_t i = 0; i <= c; ++i) {
            const Vec2 x = grid_.sites[i];
            for (std::size_t p = 0; p < nplanes; ++p) offset[p] = fr.offset[p] + std::min(0.0, dot(fr.normals[p], x));
            const double g = halfplane_area(fr.normals, offset, half ? &lengths : nullptr);
            r(Eigen::Index(i)) -= g;
            if (i != c) r(Eigen::Index(grid_.negated(i))) -= g;
            if (half && g > 0.0) {
                for (std::size_t p = 0; p < nplanes; ++p) {
                    if (fr.atom[p] >= 0 && fr.from_body[p]) weights(Eigen::Index(i), fr.atom[p]) += lengths[p];
                }
            }
        }
        // dg/da = sum_e L_e dH_e/da; residuals carry the opposite sign.
        if (half) *half = -(weights * fr.dh);
        return r;
    }

    struct Frame {
        std::vector<Vec2> normals;     // merged normal set, sorted by angle
        std::vector<double> offset;    // support numbers of B in those normals
        std::vector<int> atom;         // atom row in dh, or -1 for a box normal
        std::vector<bool> from_body;   // offset is P's (not clipped by the box)
        std::size_t atom_count = 0;
        Eigen::MatrixXd dh;            // dH_atom / d(flat variable)
    };

    // Support numbers of P(a), centroid at o, for every atom including
    // zero-mass ones, and their derivatives. False when P(a) is not a body.
    static bool build_frame(const FacetVariables& f, Frame& fr) {
        const std::size_t s = f.size();
        struct Atom {
            double angle;
            Vec2 n;
            double mass;
            std::size_t var;
        };
        std::vector<Atom> atoms;
        atoms.reserve(2 * s);
        for (std::size_t j = 0; j < s; ++j) {
            atoms.push_back({f.normals[j].angle(), f.normals[j].vec(), f.a_plus[j], 2 * j});
            const Direction m = -f.normals[j];
            atoms.push_back({m.angle(), m.vec(), f.a_minus[j], 2 * j + 1});
        }
        std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.angle < b.angle; });

        // Validity: at least three positive atoms without a gap of pi.
        std::vector<double> pos;
        for (const auto& a : atoms) {
            if (a.mass > 0.0) pos.push_back(a.angle);
        }
        if (pos.size() < 3) return false;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const double nxt = i + 1 < pos.size() ? pos[i + 1] : pos[0] + 2.0 * std::numbers::pi;
            if (nxt - pos[i] >= std::numbers::pi) return false;
        }

        const std::size_t n = atoms.size();
        auto chain = [&](const std::vector<double>& mass, std::vector<Vec2>& v) {
            v.assign(n, Vec2{});
            for (std::size_t i = 1; i < n; ++i) v[i] = v[i - 1] + perp(atoms[i - 1].n) * mass[i - 1];
        };
        auto centroid = [&](const std::vector<Vec2>& v, double& area2) {
            Vec2 m;
            area2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 a = v[i];
                const Vec2 b = v[(i + 1) % n];
                const double w = cross(a, b);
                area2 += w;
                m += (a + b) * w;
            }
            return m / (3.0 * area2);
        };
        std::vector<double> mass(n);
        for (std::size_t i = 0; i < n; ++i) mass[i] = std::max(atoms[i].mass, 0.0);
        std::vector<Vec2> v;
        chain(mass, v);
        double area2 = 0.0;
        const Vec2 cen = centroid(v, area2);
        if (!(area2 > 0.0)) return false;

        // Centroid derivative per atom by central differences on the chain.
        double scale = 0.0;
        for (double m : mass) scale = std::max(scale, m);
        const double eta = 1e-6 * scale;
        std::vector<Vec2> dc(n);
        std::vector<Vec2> w;
        for (std::size_t l = 0; l < n; ++l) {
            std::vector<double> mp = mass;
            mp[l] += eta;
            chain(mp, w);
            double a2 = 0.0;
            const Vec2 cp = centroid(w, a2);
            mp[l] -= 2.0 * eta;
            chain(mp, w);
            const Vec2 cm = centroid(w, a2);
            dc[l] = (cp - cm) / (2.0 * eta);
        }

        // Merge with the box normals (angles 0, pi/2, pi, 3 pi/2).
        fr = Frame{};
        fr.atom_count = n;
        fr.dh.setZero(Eigen::Index(n), Eigen::Index(2 * s));
        const std::array<Vec2, 4> box{Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}, Vec2{0, -1}};
        std::size_t b = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double ang = i < n ? atoms[i].angle : 2.0 * std::numbers::pi;
            while (b < 4 && b * std::numbers::pi / 2.0 < ang - 1e-12) {
                fr.normals.push_back(box[b]);
                fr.offset.push_back(0.5);
                fr.atom.push_back(-1);
                fr.from_body.push_back(false);
                ++b;
            }
            if (i == n) break;
            const double h = dot(atoms[i].n, v[i] - cen);
            const bool on_box = b < 4 && std::abs(b * std::numbers::pi / 2.0 - ang) <= 1e-12;
            fr.normals.push_back(atoms[i].n);
            fr.offset.push_back(on_box ? std::min(h, 0.5) : h);
            fr.atom.push_back(int(i));
            fr.from_body.push_back(!on_box || h <= 0.5);
            if (on_box) ++b;
            for (std::size_t l = 0; l < n; ++l) {
                double d = -dot(atoms[i].n, dc[l]);
                if (l < i) d += dot(atoms[i].n, perp(atoms[l].n));
                fr.dh(Eigen::Index(i), Eigen::Index(atoms[l].var)) += d;
            }
        }
        return true;
    }

    // Area of {y : n_p . y <= c_p for all p} for angularly sorted normals with
    // gaps below pi; `lengths` receives the edge length on every half-plane.
    static double halfplane_area(const std::vector<Vec2>& nrm, const std::vector<double>& c,
                                 std::vector<double>* lengths) {
        const std::size_t m = nrm.size();
        if (lengths) lengths->assign(m, 0.0);
        auto meet = [&](std::size_t a, std::size_t b) {
            const double det = cross(nrm[a], nrm[b]);
            return Vec2{(c[a] * nrm[b].y - c[b] * nrm[a].y) / det, (nrm[a].x * c[b] - nrm[b].x * c[a]) / det};
        };
        // Zero-mass facets pass exactly through vertices; the tolerance keeps
        // rounding from popping a binding plane at such a vertex.
        double tol = 0.0;
        for (double ci : c) tol = std::max(tol, std::abs(ci));
        tol *= 1e-12;
        auto outside = [&](std::size_t p, Vec2 q) { return dot(nrm[p], q) > c[p] + tol; };
        std::vector<std::size_t> dq(2 * m + 2);
        std::size_t lo = 0, hi = 0;  // dq[lo, hi)
        for (std::size_t p = 0; p < m; ++p) {
            while (hi - lo >= 2 && outside(p, meet(dq[hi - 2], dq[hi - 1]))) --hi;
            while (hi - lo >= 2 && outside(p, meet(dq[lo], dq[lo + 1]))) ++lo;
            if (hi > lo && cross(nrm[dq[hi - 1]], nrm[p]) <= 0.0) return 0.0;
            dq[hi++] = p;
        }
        while (hi - lo >= 3 && outside(dq[lo], meet(dq[hi - 2], dq[hi - 1]))) --hi;
        while (hi - lo >= 3 && outside(dq[hi - 1], meet(dq[lo], dq[lo + 1]))) ++lo;
        const std::size_t k = hi - lo;
        if (k < 3 || cross(nrm[dq[hi - 1]], nrm[dq[lo]]) <= 0.0) return 0.0;
        std::vector<Vec2> v(k);  // v[j] starts the edge on dq[lo + j]
        for (std::size_t j = 0; j < k; ++j) v[j] = meet(dq[lo + (j + k - 1) % k], dq[lo + j]);
        double a2 = 0.0;
        for (std::size_t j = 0; j < k; ++j) a2 += cross(v[j], v[(j + 1) % k]);
        if (!(a2 > 0.0)) {
            if (lengths) lengths->assign(m, 0.0);
            return 0.0;
        }
        if (lengths) {
            for (std::size_t j = 0; j < k; ++j) (*lengths)[dq[lo + j]] = norm(v[(j + 1) % k] - v[j]);
        }
        return 0.5 * a2;
    }

    SampleGrid grid_;
    double total_ = 0.0;
};

struct RestartResult {
    FacetVariables a;
    double objective = 0.0;
    double initial = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// One restart: projected Levenberg-Marquardt with the analytic Jacobian, steps
// restricted to the balanced subspace of the free variables and projected
// back onto the cone; then a coordinate pattern search with what remains of
// the evaluation budget.
inline RestartResult fit_restart(const CovObjective& obj, FacetVariables start, const FitOptions& opt,
                                 bool flip_search) {
    RestartResult res;
    res.a = project_to_balanced_cone(start);
    res.objective = obj(res.a);
    res.initial = res.objective;
    res.evaluations = 1;
    const double floor = 1e-20 * std::max(1.0, obj.total());
    auto budget_left = [&] { return res.evaluations < opt.max_evaluations; };
    auto done = [&] { return res.objective <= floor; };

    if (flip_search) {
        // Greedy search over which side of each normal pair carries its mass,
        // heaviest pairs first.
        std::vector<std::size_t> order(res.a.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        auto pair_mass = [&](std::size_t j) { return res.a.a_plus[j] + res.a.a_minus[j]; };
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pair_mass(i) > pair_mass(j); });
        const double heavy = 0.01 * pair_mass(order.front());
        for (bool improved = true; improved && !done() && budget_left();) {
            improved = false;
            for (std::size_t j : order) {
                if (pair_mass(j) < heavy || !budget_left()) continue;
                FacetVariables cand = res.a;
                std::swap(cand.a_plus[j], cand.a_minus[j]);
                cand = project_to_balanced_cone(cand);
                const double f = obj(cand);
                ++res.evaluations;
                if (f < res.objective) {
                    res.objective = f;
                    res.a = std::move(cand);
                    improved = true;
                }
            }
        }
    }

    Eigen::MatrixXd gram;
    Eigen::VectorXd grad;
    obj.normal_equations(res.a, gram, grad);
    ++res.evaluations;

    Eigen::VectorXd x = res.a.flat();
    const Eigen::Index n = x.size();
    // Variables this close to zero count as lying on the bound.
    const double tiny = 1e-9 * std::max(x.cwiseAbs().maxCoeff(), 1e-6);
    double mu = 1e-3;
    bool stalled = false;

    // Damped Gauss-Newton step over the free variables subject to the
    // balance condition (a KKT system); variables at zero that the step would
    // push negative are bound and the step is recomputed without them.
    auto lm_step = [&](double damping, std::vector<Eigen::Index> free) -> Eigen::VectorXd {
        for (int round = 0; round < 8; ++round) {
            const Eigen::Index nf = Eigen::Index(free.size());
            if (nf < 3) return {};
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 2, nf + 2);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 2);
            double dmax = 0.0;
            for (Eigen::Index a = 0; a < nf; ++a) dmax = std::max(dmax, gram(free[a], free[a]));
            for (Eigen::Index a = 0; a < nf; ++a) {
                for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = gram(free[a], free[b]);
                kkt(a, a) += damping * (gram(free[a], free[a]) + 1e-12 * dmax + 1e-300);
                const Eigen::Index v = free[a];
                const Vec2 u = res.a.normals[std::size_t(v / 2)].vec() * (v % 2 == 0 ? 1.0 : -1.0);
                kkt(nf, a) = kkt(a, nf) = u.x;
                kkt(nf + 1, a) = kkt(a, nf + 1) = u.y;
                rhs(a) = -grad(v);
            }
            const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
            if (!sol.allFinite()) return {};
            std::vector<Eigen::Index> keep;
            for (Eigen::Index a = 0; a < nf; ++a) {
                if (!(x(free[a]) <= tiny && sol(a) < 0.0)) keep.push_back(free[a]);
            }
            if (keep.size() == free.size()) {
                Eigen::VectorXd t = x;
                for (Eigen::Index a = 0; a < nf; ++a) t(free[a]) += sol(a);
                return t;
            }
            free = std::move(keep);
        }
        return {};
    };

    while (!done() && budget_left()) {
        std::vector<Eigen::Index> candidates;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (x(j) > tiny || grad(j) < 0.0) candidates.push_back(j);
        }
        bool accepted = false;
        double rel = 0.0;
        while (budget_left() && mu < 1e10) {
            Eigen::VectorXd t = lm_step(mu, candidates);
            if (t.size() == 0) {
                mu = 1e10;
                break;
            }
            // Masses the objective barely sees (facets cut off by the box)
            // get almost no curvature; a step may not exceed the largest mass.
            const double reach = std::max(x.maxCoeff(), tiny);
            const double len = (t - x).lpNorm<Eigen::Infinity>();
            if (len > reach) t = x + (reach / len) * (t - x);
            // Proposals along the projection arc x(b) = P(x + b d), then the
            // step truncated where the first variable reaches zero; the first
            // one that decreases the objective is taken.
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (t(j) < 0.0 && x(j) > 0.0) alpha = std::min(alpha, x(j) / (x(j) - t(j)));
            }
            std::vector<Eigen::VectorXd> proposals;
            for (double b : {1.0, 0.25}) proposals.push_back((x + b * (t - x)).cwiseMax(0.0));
            if (alpha < 0.25 && alpha > 0.0) proposals.push_back((x + alpha * (t - x)).cwiseMax(0.0));
            FacetVariables best_cand;
            double best_f = res.objective;
            for (const auto& pr : proposals) {
                if (!budget_left()) break;
                FacetVariables cand = project_to_balanced_cone(res.a.with(pr));
                const double f = obj(cand);
                ++res.evaluations;
                if (f < best_f) {
                    best_f = f;
                    best_cand = std::move(cand);
                    break;
                }
            }
            if (best_f < res.objective) {
                rel = (res.objective - best_f) / res.objective;
                res.objective = best_f;
                res.a = std::move(best_cand);
                x = res.a.flat();
                obj.normal_equations(res.a, gram, grad);
                ++res.evaluations;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        if (rel < opt.relative_tolerance) break;
    }
    res.converged = done() || (!stalled && budget_left());

    // Pattern search for kinks the gradient step cannot cross.
    const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-6);
    double step = 1e-2 * scale;
    while (!done() && budget_left() && step > 1e-9 * scale) {
        bool improved = false;
        for (Eigen::Index j = 0; j < x.size() && budget_left(); ++j) {
            for (double sgn : {1.0, -1.0}) {
                Eigen::VectorXd t = x;
                t(j) = std::max(0.0, t(j) + sgn * step);
                const FacetVariables cand = project_to_balanced_cone(res.a.with(t));
                const double f = obj(cand);
                ++res.evaluations;
                if (f < res.objective * (1.0 - opt.relative_tolerance)) {
                    res.objective = f;
                    res.a = cand;
                    x = cand.flat();
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.25;
    }
    if (done() || step <= 1e-9 * scale) res.converged = true;
    return res;
}

}  // namespace detail

/// Nonlinear least squares fit of facet masses over the normals of Qk to the
/// covariogram samples. Returns P(a) ∩ C0 translated to centroid o.
inline std::pair<Polygon, FitReport> cov_lsq_fit(const SampleGrid& grid, const Polygon& qk,
                                                 const FitOptions& opt = {}) {
    if (opt.restarts < 1) throw ConfigurationError("need at least one restart");
    if (opt.max_evaluations < 1 || opt.screening_evaluations < 1) {
        throw ConfigurationError("evaluation budgets must be positive");
    }
    const FacetVariables base = detail::facets_of(qk);
    const detail::CovObjective obj(grid);

    // Scale Qk's masses so that the initial body has area max(M(o), 1e-3).
    const double target = std::max(grid.values[grid.center()], 1e-3);
    auto scaled_start = [&](FacetVariables f) {
        f = project_to_balanced_cone(f);
        double ar = 0.0;
        try {
            ar = area(polygon_from_facets(f));
        } catch (const Error&) {
            f = project_to_balanced_cone(base);
            ar = area(polygon_from_facets(f));
        }
        const double s = std::sqrt(target / ar);
        for (auto& v : f.a_plus) v *= s;
        for (auto& v : f.a_minus) v *= s;
        return f;
    };

    std::vector<detail::RestartResult> results(std::size_t(opt.restarts));
    detail::parallel_for(results.size(), [&](std::size_t r) {
        FacetVariables start = base;
        if (r > 0) {
            CounterStream rng(derive_key(opt.seed, {0x6c7371ULL, r}));
            // Random split of each pair's mass between +u_j and -u_j breaks
            // the reflection symmetry of the first-stage body.
            for (std::size_t j = 0; j < start.size(); ++j) {
                const double m = start.a_plus[j] + start.a_minus[j];
                const bool plus = rng.uniform() < 0.5;
                start.a_plus[j] = plus ? m : 0.0;
                start.a_minus[j] = plus ? 0.0 : m;
            }
        }
        FitOptions screen = opt;
        screen.max_evaluations = std::min(opt.screening_evaluations, opt.max_evaluations);
        results[r] = detail::fit_restart(obj, scaled_start(start), screen, r > 0);
    });

    // Only the most promising restart gets the rest of the budget.
    std::size_t lead = 0;
    for (std::size_t r = 1; r < results.size(); ++r) {
        if (results[r].objective < results[lead].objective) lead = r;
    }
    if (!results[lead].converged && results[lead].evaluations < opt.max_evaluations) {
        FitOptions rest = opt;
        rest.max_evaluations = opt.max_evaluations - results[lead].evaluations;
        detail::RestartResult more = detail::fit_restart(obj, results[lead].a, rest, false);
        more.initial = results[lead].initial;
        more.evaluations += results[lead].evaluations;
        if (more.objective > results[lead].objective) {
            more.a = results[lead].a;
            more.objective = results[lead].objective;
        }
        results[lead] = std::move(more);
    }

    std::size_t best = 0;
    FitReport report;
    for (std::size_t r = 0; r < results.size(); ++r) {
        if (results[r].objective < results[best].objective) best = r;
        report.iterations += results[r].evaluations;
        report.initial_objectives.push_back(results[r].initial);
    }
    report.solution = results[best].a;
    report.objective = results[best].objective;
    report.restarts = opt.restarts;
    report.converged = results[best].converged;

    Polygon body = intersect_convex(polygon_from_facets(report.solution), unit_box());
    if (body.is_degenerate()) throw ReconstructionFailure("cov_lsq", "fitted body has empty interior");
    return {centered(body), std::move(report)};
}

}  // namespace covrec
