#pragma once

// End-to-end reconstruction: a first stage producing the o-symmetric polygon
// Q_k, then the covariogram least squares fit on an independent measurement
// set. Each entry point runs either from a known body (measurements are
// simulated) or from measurement sets supplied by the caller.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/detail/parallel.hpp"
#include "covrec/errors.hpp"
#include "covrec/estimators.hpp"
#include "covrec/geometry.hpp"
#include "covrec/lsq.hpp"
#include "covrec/measurement.hpp"
#include "covrec/random.hpp"
#include "covrec/spectral.hpp"

namespace covrec {

enum class Problem { cov, mod2, mod };
enum class FirstStage { blaschke, diff };

inline std::string to_string(Problem p) {
    switch (p) {
        case Problem::cov: return "cov";
        case Problem::mod2: return "mod2";
        case Problem::mod: return "mod";
    }
    return "cov";
}

inline Problem problem_from_string(const std::string& s) {
    if (s == "cov" || s == "1") return Problem::cov;
    if (s == "mod2" || s == "2") return Problem::mod2;
    if (s == "mod" || s == "3") return Problem::mod;
    throw ConfigurationError("unknown problem '" + s + "'");
}

inline std::string to_string(FirstStage f) { return f == FirstStage::blaschke ? "blaschke" : "diff"; }

inline FirstStage first_stage_from_string(const std::string& s) {
    if (s == "blaschke") return FirstStage::blaschke;
    if (s == "diff") return FirstStage::diff;
    throw ConfigurationError("unknown first stage '" + s + "'");
}

// Stream labels under the run seed.
enum class Stage : std::uint64_t { first = 1, second = 2, optimizer = 3 };

inline std::uint64_t stage_seed(std::uint64_t seed, Stage s) {
    return derive_key(seed, {static_cast<std::uint64_t>(s)});
}

struct PipelineConfig {
    Problem problem = Problem::cov;
    FirstStage first_stage = FirstStage::blaschke;
    int k = 8;
    int directions = 0;                 // Blaschke-path directions; 0 means k
    double gamma = 0.75;                // frequency scale of the second-stage set
    std::optional<double> first_gamma;  // of the first-stage set; 0.8 (Blaschke) or 0.95 (diff)
    double epsilon = 0.1;               // h_k = k^(gamma_1 - 1 + epsilon)
    double alpha = 0.06;                // kernel schedule exponent
    bool bernstein = false;             // delta_k = k^-(1 - alpha) log k
    KernelKind kernel = KernelKind::uniform_box;
    std::optional<double> kernel_epsilon;  // explicit eps_k, replaces the schedule
    std::optional<double> kernel_delta;    // explicit delta_k, replaces the schedule
    NoiseModel noise;
    std::uint64_t seed = 0;
    FitOptions fit;
    bool first_stage_only = false;

    bool uses_frequencies() const { return problem != Problem::cov; }

    int direction_count() const { return directions > 0 ? directions : k; }

    double first_gamma_value() const {
        return first_gamma.value_or(first_stage == FirstStage::blaschke ? 0.8 : 0.95);
    }

    double h_k() const { return std::pow(double(k), first_gamma_value() - 1.0 + epsilon); }

    bool schedule_overridden() const { return kernel_epsilon.has_value() && kernel_delta.has_value(); }

    /// Threshold kernel for the difference-body path. Without overrides,
    /// eps_k = k^-alpha and delta_k is the slower of the rate schedule and,
    /// for Fourier data, the exponent that keeps delta^4 k^(8 gamma - 15/2)
    /// from vanishing.
    KernelSpec kernel_spec() const {
        double eps = 0.0, delta = 0.0;
        if (bernstein) {
            const KernelSpec b = KernelSpec::bernstein_schedule(k, alpha, kernel);
            eps = b.epsilon();
            delta = b.delta();
        } else {
            const KernelSpec r = KernelSpec::rate_schedule(k, alpha, kernel);
            eps = r.epsilon();
            delta = r.delta();
            if (uses_frequencies()) {
                const double rate = 0.5 - 6.0 * alpha;
                const double phase = 8.0 * first_gamma_value() - 7.5;
                delta = std::pow(double(k), -std::min(rate, phase) / 4.0);
            }
        }
        return {kernel, kernel_epsilon.value_or(eps), kernel_delta.value_or(delta)};
    }

    /// The finite-k value of the quantity whose lim inf must stay positive:
    /// delta^4 eps^6 k^(1/2) for covariogram data, delta^4 k^(8 gamma - 15/2)
    /// for Fourier data.
    double schedule_check(const KernelSpec& spec) const {
        const double d4 = std::pow(spec.delta(), 4.0);
        if (uses_frequencies()) return d4 * std::pow(double(k), 8.0 * first_gamma_value() - 7.5);
        return d4 * std::pow(spec.epsilon(), 6.0) * std::sqrt(double(k));
    }

    /// Throws ConfigurationError naming the first violated window.
    void validate() const {
        auto fail = [](const std::string& what) { throw ConfigurationError(what); };
        if (k < 1) fail("k must be >= 1, got " + std::to_string(k));
        if (directions < 0) fail("direction count must be >= 0");
        if (first_stage == FirstStage::blaschke && direction_count() < 2) {
            fail("Blaschke path needs at least two directions");
        }
        noise.validate();
        if (fit.restarts < 1) fail("optimizer needs at least one restart");
        if (fit.max_evaluations < 1 || fit.screening_evaluations < 1) fail("optimizer budgets must be positive");

        if (uses_frequencies()) {
            if (!(gamma > 0.625 && gamma < 1.0)) {
                fail("gamma window 5/8 < gamma < 1 violated by the second-stage gamma = " + std::to_string(gamma));
            }
            const double g1 = first_gamma_value();
            if (first_stage == FirstStage::blaschke) {
                if (!(epsilon > 0.0 && epsilon < 1.0 - g1)) {
                    fail("h_k window 0 < epsilon < 1 - gamma violated: epsilon = " + std::to_string(epsilon) +
                         ", gamma = " + std::to_string(g1));
                }
                if (!(9.0 - 12.0 * g1 - 4.0 * epsilon < 0.0)) {
                    fail("h_k window 9 - 12 gamma - 4 epsilon < 0 violated: gamma = " + std::to_string(g1) +
                         ", epsilon = " + std::to_string(epsilon));
                }
            } else if (!(g1 > 0.9375 && g1 < 1.0)) {
                fail("difference-path window 15/16 < gamma < 1 violated: gamma = " + std::to_string(g1));
            }
        }

        if (first_stage == FirstStage::diff) {
            if (kernel_epsilon && !(*kernel_epsilon > 0.0)) fail("kernel bandwidth override must be > 0");
            if (kernel_delta && !(*kernel_delta > 0.0)) fail("kernel threshold override must be > 0");
            if (!schedule_overridden()) {
                if (!(alpha > 0.0 && alpha < 1.0 / 12.0)) {
                    fail("schedule window 0 < alpha < 1/12 violated: alpha = " + std::to_string(alpha));
                }
                if (bernstein && k < 2) fail("Bernstein schedule needs k >= 2");
            }
            // Schedules satisfy the lim inf condition with equality or better;
            // a partial override can break it.
            if (!bernstein && !schedule_overridden() && schedule_check(kernel_spec()) < 1.0 - 1e-9) {
                fail("threshold schedule makes delta^4 eps^6 k^(1/2) (or its Fourier analogue) decay");
            }
        }
    }
};

struct StageDiagnostics {
    double fit_objective = 0.0;
    int fit_evaluations = 0;
    int restarts = 0;
    bool converged = false;
    int directions = 0;
    std::optional<double> kernel_epsilon;
    std::optional<double> kernel_delta;
    std::optional<double> schedule_check;
    std::optional<double> h_k;
    std::optional<double> gamma;
    std::optional<double> first_gamma;
    std::optional<double> synthesis_residual;  // needs the truth
    std::uint64_t first_seed = 0;
    std::uint64_t second_seed = 0;
};

struct ReconstructionReport {
    Problem problem = Problem::cov;
    FirstStage first_stage = FirstStage::blaschke;
    int k = 0;
    Polygon output;       // P_k, centroid at o; empty for first-stage-only runs
    Polygon first_body;   // Q_k
    std::optional<double> error_to_truth;     // min over P_k and -P_k
    std::optional<double> first_stage_error;  // against the Blaschke or difference body
    StageDiagnostics diagnostics;
    double wall_ms = 0.0;  // not part of any serialized report
};

/// min{delta(K, P), delta(-K, P)}.
inline double error_up_to_reflection(const Polygon& truth, const Polygon& p) {
    return std::min(hausdorff_distance(truth, p), hausdorff_distance(truth.reflected(), p));
}

namespace detail {

inline Polygon require_first_body(Polygon q) {
    if (q.is_degenerate()) throw ReconstructionFailure("first stage", "threshold set S_k is empty or flat");
    return q;
}

inline void require_distinct(const MeasurementSet& a, const MeasurementSet& b) {
    if (a.seed == b.seed) {
        throw ConfigurationError("first- and second-stage measurements share seed " + std::to_string(a.seed) +
                                 "; the stages must be independent");
    }
    if (a.k != b.k) {
        throw ConfigurationError("k mismatch between stages: " + std::to_string(a.k) + " and " +
                                 std::to_string(b.k));
    }
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Second stage and report assembly shared by all problems.
inline ReconstructionReport finish(const PipelineConfig& cfg, const SampleGrid& grid, Polygon qk,
                                   StageDiagnostics diag, const Polygon* truth,
                                   std::chrono::steady_clock::time_point t0) {
    ReconstructionReport rep;
    rep.problem = cfg.problem;
    rep.first_stage = cfg.first_stage;
    rep.k = cfg.k;
    rep.first_body = std::move(qk);
    if (truth) {
        const Polygon ref = cfg.first_stage == FirstStage::blaschke ? blaschke_body(*truth) : difference_body(*truth);
        rep.first_stage_error = hausdorff_distance(ref, rep.first_body);
    }
    if (!cfg.first_stage_only) {
        FitOptions fo = cfg.fit;
        fo.seed = stage_seed(cfg.seed, Stage::optimizer);
        auto [p, fit] = cov_lsq_fit(grid, rep.first_body, fo);
        rep.output = std::move(p);
        diag.fit_objective = fit.objective;
        diag.fit_evaluations = fit.iterations;
        diag.restarts = fit.restarts;
        diag.converged = fit.converged;
        if (truth) rep.error_to_truth = error_up_to_reflection(*truth, rep.output);
    }
    rep.diagnostics = std::move(diag);
    rep.wall_ms = elapsed_ms(t0);
    return rep;
}

inline void record_kernel(const PipelineConfig& cfg, const KernelSpec& spec, StageDiagnostics& d) {
    d.kernel_epsilon = spec.epsilon();
    d.kernel_delta = spec.delta();
    d.schedule_check = cfg.schedule_check(spec);
}

// Problems 2 and 3 after the modulus pairs are combined.
inline ReconstructionReport run_fourier(const MeasurementSet& first, const MeasurementSet& second, PipelineConfig cfg,
                                        const Polygon* truth, std::chrono::steady_clock::time_point t0) {
    first.require(Design::mod2);
    second.require(Design::mod2);
    require_distinct(first, second);
    cfg.k = first.k;
    cfg.first_gamma = *first.gamma;
    cfg.gamma = *second.gamma;
    cfg.validate();

    StageDiagnostics diag;
    diag.first_seed = first.seed;
    diag.second_seed = second.seed;
    diag.gamma = cfg.gamma;
    diag.first_gamma = cfg.first_gamma_value();
    Polygon qk;
    if (cfg.first_stage == FirstStage::blaschke) {
        const auto dirs = equally_spaced_directions(cfg.direction_count());
        diag.directions = int(dirs.size());
        diag.h_k = cfg.h_k();
        qk = bright_lsq_fit(brightness_from_synthesis(first, cfg.h_k(), dirs));
    } else {
        const KernelSpec spec = cfg.kernel_spec();
        record_kernel(cfg, spec, diag);
        qk = require_first_body(threshold_difference_hull(phase_grid_estimates(first), spec));
    }
    if (truth) diag.synthesis_residual = synthesis_residual(*truth, cfg.k, cfg.gamma);
    const SampleGrid grid = cfg.first_stage_only ? SampleGrid{} : phase_grid_estimates(second);
    return finish(cfg, grid, std::move(qk), std::move(diag), truth, t0);
}

}  // namespace detail

/// Problem 1 from covariogram measurements: `first` is cov_blaschke (Blaschke
/// path) or cov_grid (difference path), `second` is cov_grid.
inline ReconstructionReport run_problem1(const MeasurementSet& first, const MeasurementSet& second,
                                         PipelineConfig cfg, const Polygon* truth = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.problem != Problem::cov) throw ConfigurationError("run_problem1 needs problem = cov");
    first.require(cfg.first_stage == FirstStage::blaschke ? Design::cov_blaschke : Design::cov_grid);
    second.require(Design::cov_grid);
    detail::require_distinct(first, second);
    cfg.k = first.k;
    if (cfg.first_stage == FirstStage::blaschke) cfg.directions = int(first.directions.size());
    cfg.validate();

    StageDiagnostics diag;
    diag.first_seed = first.seed;
    diag.second_seed = second.seed;
    Polygon qk;
    if (cfg.first_stage == FirstStage::blaschke) {
        diag.directions = int(first.directions.size());
        diag.h_k = 1.0 / double(cfg.k);
        qk = bright_lsq_fit(brightness_from_cov_diffs(first));
    } else {
        const KernelSpec spec = cfg.kernel_spec();
        detail::record_kernel(cfg, spec, diag);
        qk = detail::require_first_body(threshold_difference_hull(first, spec));
    }
    const SampleGrid grid = cfg.first_stage_only ? SampleGrid{} : as_sample_grid(second);
    return detail::finish(cfg, grid, std::move(qk), std::move(diag), truth, t0);
}

/// Problem 1 with both measurement sets simulated from `truth` on independent
/// streams.
inline ReconstructionReport run_problem1(const Polygon& truth, PipelineConfig cfg) {
    cfg.problem = Problem::cov;
    cfg.validate();
    const std::uint64_t s1 = stage_seed(cfg.seed, Stage::first);
    const std::uint64_t s2 = stage_seed(cfg.seed, Stage::second);
    const MeasurementSet first =
        cfg.first_stage == FirstStage::blaschke
            ? gen_cov_blaschke(truth, cfg.k, equally_spaced_directions(cfg.direction_count()), cfg.noise, s1)
            : gen_cov_grid(truth, cfg.k, cfg.noise, s1);
    const MeasurementSet second = gen_cov_grid(truth, cfg.k, cfg.noise, s2);
    return run_problem1(first, second, cfg, &truth);
}

/// Problem 2 from two mod2 sets (first stage, second stage).
inline ReconstructionReport run_problem2(const MeasurementSet& first, const MeasurementSet& second,
                                         PipelineConfig cfg, const Polygon* truth = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.problem != Problem::mod2) throw ConfigurationError("run_problem2 needs problem = mod2");
    return detail::run_fourier(first, second, std::move(cfg), truth, t0);
}

inline ReconstructionReport run_problem2(const Polygon& truth, PipelineConfig cfg) {
    cfg.problem = Problem::mod2;
    cfg.validate();
    const MeasurementSet first =
        gen_mod2(truth, cfg.k, cfg.first_gamma_value(), cfg.noise, stage_seed(cfg.seed, Stage::first));
    const MeasurementSet second = gen_mod2(truth, cfg.k, cfg.gamma, cfg.noise, stage_seed(cfg.seed, Stage::second));
    return run_problem2(first, second, cfg, &truth);
}

/// Problem 3 from two mod_pair sets; each is reduced to squared-modulus
/// estimates by multiplying its two copies, then handled as Problem 2.
inline ReconstructionReport run_problem3(const MeasurementSet& first, const MeasurementSet& second,
                                         PipelineConfig cfg, const Polygon* truth = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.problem != Problem::mod) throw ConfigurationError("run_problem3 needs problem = mod");
    first.require(Design::mod_pair);
    second.require(Design::mod_pair);
    ReconstructionReport rep =
        detail::run_fourier(combine_mod_pairs(first), combine_mod_pairs(second), std::move(cfg), truth, t0);
    rep.problem = Problem::mod;
    return rep;
}

inline ReconstructionReport run_problem3(const Polygon& truth, PipelineConfig cfg) {
    cfg.problem = Problem::mod;
    cfg.validate();
    const MeasurementSet first =
        gen_mod_pair(truth, cfg.k, cfg.first_gamma_value(), cfg.noise, stage_seed(cfg.seed, Stage::first));
    const MeasurementSet second =
        gen_mod_pair(truth, cfg.k, cfg.gamma, cfg.noise, stage_seed(cfg.seed, Stage::second));
    return run_problem3(first, second, cfg, &truth);
}

inline ReconstructionReport run_problem(const Polygon& truth, const PipelineConfig& cfg) {
    switch (cfg.problem) {
        case Problem::cov: return run_problem1(truth, cfg);
        case Problem::mod2: return run_problem2(truth, cfg);
        case Problem::mod: return run_problem3(truth, cfg);
    }
    throw ConfigurationError("unknown problem");
}

/// One (k, seed) cell. A failed stage is recorded, not thrown, and its errors
/// count as +inf in the medians.
struct ExperimentRow {
    int k = 0;
    std::uint64_t seed = 0;
    double error = 0.0;              // error_to_truth, or first_stage_error when only Q_k is built
    double first_stage_error = 0.0;
    double objective = 0.0;
    double wall_ms = 0.0;
    std::optional<double> bound;     // difference path: sqrt(2) (2 / b)^(1/2) delta_k^(1/2)
    std::optional<bool> pass;        // first_stage_error <= bound
    std::string failure;
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;             // k-major, then seeds in input order
    std::vector<std::pair<int, double>> medians;  // per k, in input order
};

/// Volume fraction b / V(K0) used in the first-stage rate bound.
inline constexpr double rate_bound_volume_fraction = 0.9;

/// delta(DK0, Q_k) <= sqrt(2) (2 / b)^(1/2) delta_k^(1/2) with b = 0.9 V(K0).
inline double first_stage_rate_bound(const Polygon& truth, double delta) {
    const double b = rate_bound_volume_fraction * area(truth);
    return std::sqrt(2.0) * std::sqrt(2.0 / b) * std::sqrt(delta);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline ExperimentTable convergence_experiment(const Polygon& truth, const PipelineConfig& cfg,
                                              const std::vector<int>& ks, const std::vector<std::uint64_t>& seeds) {
    for (int k : ks) {
        PipelineConfig c = cfg;
        c.k = k;
        c.validate();
    }
    ExperimentTable table;
    table.rows.resize(ks.size() * seeds.size());
    detail::parallel_for(table.rows.size(), [&](std::size_t cell) {
        ExperimentRow& row = table.rows[cell];
        PipelineConfig c = cfg;
        c.k = ks[cell / seeds.size()];
        c.seed = seeds[cell % seeds.size()];
        row.k = c.k;
        row.seed = c.seed;
        const double inf = std::numeric_limits<double>::infinity();
        if (c.first_stage == FirstStage::diff) row.bound = first_stage_rate_bound(truth, c.kernel_spec().delta());
        try {
            const ReconstructionReport rep = run_problem(truth, c);
            row.first_stage_error = rep.first_stage_error.value_or(inf);
            row.error = c.first_stage_only ? row.first_stage_error : rep.error_to_truth.value_or(inf);
            row.objective = rep.diagnostics.fit_objective;
            row.wall_ms = rep.wall_ms;
        } catch (const ReconstructionFailure& e) {
            row.error = row.first_stage_error = inf;
            row.failure = e.what();
        }
        if (row.bound) row.pass = row.first_stage_error <= *row.bound;
    });
    for (std::size_t i = 0; i < ks.size(); ++i) {
        std::vector<double> errs;
        for (std::size_t j = 0; j < seeds.size(); ++j) errs.push_back(table.rows[i * seeds.size() + j].error);
        if (!errs.empty()) table.medians.emplace_back(ks[i], median(errs));
    }
    return table;
}

}  // namespace covrec
