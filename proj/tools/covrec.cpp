// covrec: build bodies, simulate measurements, reconstruct, run experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 reconstruction failure,
// 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covrec/bodies.hpp"
#include "covrec/io.hpp"
#include "covrec/measurement.hpp"
#include "covrec/pipelines.hpp"

namespace {

using namespace covrec;
using io::json;

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        io::write_text(path, text);
    }
}

struct NoiseFlags {
    std::string kind = "none";
    double sigma = 0.0;
    double scale = 1e4;

    void attach(CLI::App* app) {
        app->add_option("--noise", kind, "none, gaussian, poisson or poisson_gaussian")->capture_default_str();
        app->add_option("--sigma", sigma, "Gaussian standard deviation")->capture_default_str();
        app->add_option("--poisson-scale", scale, "Poisson counts per unit value")->capture_default_str();
    }

    NoiseModel model() const {
        NoiseModel n{noise_kind_from_string(kind), sigma, scale};
        n.validate();
        return n;
    }
};

// ---------------------------------------------------------------- body

struct BodyCmd {
    std::string shape = "square";
    int m = 5;
    double scale = 0.48;
    int vertices = 7;
    std::uint64_t seed = 0;
    double a = 0.4, b = 0.25;
    int segments = 64;
    std::string out;

    void attach(CLI::App& root) {
        CLI::App* c = root.add_subcommand("body", "write a body file");
        c->add_option("shape", shape, "square, mgon, random or ellipse")->capture_default_str();
        c->add_option("--m", m, "vertex count of the regular polygon")->capture_default_str();
        c->add_option("--scale", scale, "circumradius of the regular polygon")->capture_default_str();
        c->add_option("--vertices", vertices, "vertex count of the random polygon")->capture_default_str();
        c->add_option("--seed", seed, "seed of the random polygon")->capture_default_str();
        c->add_option("--a", a, "ellipse semi-axis along x")->capture_default_str();
        c->add_option("--b", b, "ellipse semi-axis along y")->capture_default_str();
        c->add_option("--segments", segments, "ellipse polygon segments")->capture_default_str();
        c->add_option("-o,--output", out, "output file (default stdout)");
        c->callback([this] { run(); });
    }

    void run() const {
        json spec = {{"shape", shape}};
        if (shape == "mgon" || shape == "regular") spec = {{"shape", "mgon"}, {"m", m}, {"scale", scale}};
        if (shape == "random") spec["vertices"] = vertices, spec["seed"] = seed;
        if (shape == "ellipse") spec["a"] = a, spec["b"] = b, spec["segments"] = segments;
        emit(out, io::dump(io::body_to_json(io::body_from_shape(spec))));
    }
};

// ---------------------------------------------------------------- measure

struct MeasureCmd {
    std::string body, design = "cov-grid", out;
    int k = 8;
    std::optional<double> gamma;
    int directions = 0;
    std::uint64_t seed = 0;
    NoiseFlags noise;

    void attach(CLI::App& root) {
        CLI::App* c = root.add_subcommand("measure", "simulate a measurement set");
        c->add_option("--body", body, "body file")->required();
        c->add_option("--design", design, "cov-grid, cov-blaschke, mod2 or mod")->capture_default_str();
        c->add_option("--k", k, "sampling level")->capture_default_str();
        c->add_option("--gamma", gamma, "frequency scale for mod2 and mod (default 0.75)");
        c->add_option("--directions", directions, "directions for cov-blaschke (default k)");
        c->add_option("--seed", seed, "noise seed")->capture_default_str();
        noise.attach(c);
        c->add_option("-o,--output", out, "output file (default stdout)");
        c->callback([this] { run(); });
    }

    void run() const {
        const Polygon p = io::load_body(body);
        const Design d = design_from_string(design);
        const NoiseModel n = noise.model();
        if (k < 1) throw ConfigurationError("k must be >= 1");
        MeasurementSet ms;
        switch (d) {
            case Design::cov_grid: ms = gen_cov_grid(p, k, n, seed); break;
            case Design::cov_blaschke:
                ms = gen_cov_blaschke(p, k, equally_spaced_directions(directions > 0 ? directions : k), n, seed);
                break;
            case Design::mod2:
            case Design::mod_pair: {
                const double g = gamma.value_or(0.75);
                if (!(g > 0.625 && g < 1.0)) {
                    throw ConfigurationError("gamma window 5/8 < gamma < 1 violated: gamma = " + std::to_string(g));
                }
                ms = d == Design::mod2 ? gen_mod2(p, k, g, n, seed) : gen_mod_pair(p, k, g, n, seed);
                break;
            }
        }
        emit(out, io::dump(io::measurement_to_json(ms)));
    }
};

// ---------------------------------------------------------------- reconstruct

struct ReconstructCmd {
    std::string problem = "cov", first_stage = "blaschke";
    std::string first, second, truth, svg, out;
    int k = 8, directions = 0;
    double gamma = 0.75;
    std::optional<double> first_gamma, kernel_epsilon, kernel_delta;
    double epsilon = 0.1, alpha = 0.06;
    bool bernstein = false, first_stage_only = false, show_first = false;
    std::string kernel = "uniform_box";
    std::uint64_t seed = 0;
    int restarts = FitOptions{}.restarts, max_evaluations = FitOptions{}.max_evaluations;
    NoiseFlags noise;

    void attach(CLI::App& root) {
        CLI::App* c = root.add_subcommand(
            "reconstruct",
            "reconstruct from two measurement files, or from simulated measurements of --truth when none are given");
        c->add_option("--problem", problem, "cov, mod2 or mod")->capture_default_str();
        c->add_option("--first-stage", first_stage, "blaschke or diff")->capture_default_str();
        auto* f1 = c->add_option("--first", first, "first-stage measurement file");
        auto* f2 = c->add_option("--second", second, "second-stage measurement file");
        f1->needs(f2);
        f2->needs(f1);
        c->add_option("--truth", truth, "body file of the true body");
        c->add_option("--svg", svg, "write an overlay figure");
        c->add_flag("--show-first", show_first, "draw Q_k in the figure");
        c->add_option("--k", k, "sampling level (simulated runs)")->capture_default_str();
        c->add_option("--directions", directions, "Blaschke-path directions (simulated runs; default k)");
        c->add_option("--gamma", gamma, "second-stage frequency scale (simulated runs)")->capture_default_str();
        c->add_option("--first-gamma", first_gamma, "first-stage frequency scale (simulated runs)");
        noise.attach(c);
        c->add_option("--epsilon", epsilon, "h_k exponent offset")->capture_default_str();
        c->add_option("--alpha", alpha, "threshold schedule exponent")->capture_default_str();
        c->add_flag("--bernstein", bernstein, "Bernstein-regime threshold schedule");
        c->add_option("--kernel", kernel, "uniform_box or product_epanechnikov")->capture_default_str();
        c->add_option("--kernel-epsilon", kernel_epsilon, "explicit kernel bandwidth");
        c->add_option("--kernel-delta", kernel_delta, "explicit threshold");
        c->add_option("--seed", seed, "run seed")->capture_default_str();
        c->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
        c->add_option("--max-evaluations", max_evaluations, "optimizer budget")->capture_default_str();
        c->add_flag("--first-stage-only", first_stage_only, "stop after Q_k");
        c->add_option("-o,--output", out, "report file (default stdout)");
        c->callback([this] { run(); });
    }

    void run() const {
        PipelineConfig cfg;
        cfg.problem = problem_from_string(problem);
        cfg.first_stage = first_stage_from_string(first_stage);
        cfg.k = k;
        cfg.directions = directions;
        cfg.gamma = gamma;
        cfg.first_gamma = first_gamma;
        cfg.epsilon = epsilon;
        cfg.alpha = alpha;
        cfg.bernstein = bernstein;
        cfg.kernel = kernel_kind_from_string(kernel);
        cfg.kernel_epsilon = kernel_epsilon;
        cfg.kernel_delta = kernel_delta;
        cfg.noise = noise.model();
        cfg.seed = seed;
        cfg.fit.restarts = restarts;
        cfg.fit.max_evaluations = max_evaluations;
        cfg.first_stage_only = first_stage_only;

        std::optional<Polygon> body;
        if (!truth.empty()) body = io::load_body(truth);
        const Polygon* t = body ? &*body : nullptr;

        ReconstructionReport rep;
        if (!first.empty()) {
            const MeasurementSet a = io::load_measurements(first);
            const MeasurementSet b = io::load_measurements(second);
            switch (cfg.problem) {
                case Problem::cov: rep = run_problem1(a, b, cfg, t); break;
                case Problem::mod2: rep = run_problem2(a, b, cfg, t); break;
                case Problem::mod: rep = run_problem3(a, b, cfg, t); break;
            }
        } else if (t) {
            rep = run_problem(*t, cfg);
        } else {
            throw ConfigurationError("give --first and --second, or --truth to simulate");
        }
        emit(out, io::dump(io::report_to_json(rep)));
        if (!svg.empty()) {
            io::OverlayOptions o;
            o.first_body = show_first || first_stage_only;
            io::write_text(svg, io::overlay_svg(t, rep, o));
        }
    }
};

// ---------------------------------------------------------------- experiment

struct ExperimentCmd {
    std::string config, csv, svg;

    void attach(CLI::App& root) {
        CLI::App* c = root.add_subcommand("experiment", "run a convergence experiment");
        c->add_option("--config", config, "experiment config file")->required();
        c->add_option("--csv", csv, "table file (default stdout)");
        c->add_option("--svg", svg, "median error against k, log-log");
        c->callback([this] { run(); });
    }

    void run() const {
        const std::string base = std::filesystem::path(config).parent_path().string();
        const io::ExperimentConfig e = io::experiment_from_json(io::read_json(config), base);
        const ExperimentTable t = convergence_experiment(e.body, e.pipeline, e.ks, e.seeds);
        emit(csv, io::experiment_csv(t));
        if (!svg.empty()) {
            const std::string plot = io::error_plot_svg(t);
            if (!plot.empty()) io::write_text(svg, plot);
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct convex polygons from noisy covariogram or Fourier modulus data"};
    app.require_subcommand(1);
    BodyCmd body;
    MeasureCmd measure;
    ReconstructCmd reconstruct;
    ExperimentCmd experiment;
    body.attach(app);
    measure.attach(app);
    reconstruct.attach(app);
    experiment.attach(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const covrec::ReconstructionFailure& e) {
        std::cerr << "reconstruction failed in " << e.what() << "\n";
        return 3;
    } catch (const covrec::InfeasibleMeasure& e) {
        std::cerr << "reconstruction failed: " << e.what() << "\n";
        return 3;
    } catch (const covrec::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const covrec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
