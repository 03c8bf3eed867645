#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "covrec/io.hpp"

#ifndef COVREC_CLI
#error "COVREC_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("covrec_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Exit status of the binary with `args`; stdout and stderr go to files.
    int run(const std::string& args) const {
        const std::string cmd = std::string(COVREC_CLI) + " " + args + " >" + path("stdout") + " 2>" + path("stderr");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string text(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    json load(const std::string& name) const { return json::parse(text(name)); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, BodyShapes) {
    ASSERT_EQ(run("body square -o " + path("sq.json")), 0);
    const auto sq = covrec::io::load_body(path("sq.json"));
    EXPECT_EQ(covrec::hausdorff_distance(sq, covrec::unit_box()), 0.0);

    ASSERT_EQ(run("body mgon --m 5 --scale 0.48 -o " + path("p.json")), 0);
    EXPECT_EQ(load("p.json")["vertices"].size(), 5u);

    ASSERT_EQ(run("body random --vertices 7 --seed 3 -o " + path("a.json")), 0);
    ASSERT_EQ(run("body random --vertices 7 --seed 3 -o " + path("b.json")), 0);
    EXPECT_EQ(text("a.json"), text("b.json"));

    EXPECT_EQ(run("body mgon --m 5 --scale 0.9"), 2);
    EXPECT_EQ(run("body square --bogus"), 2);
}

TEST_F(Cli, MeasurementCounts) {
    ASSERT_EQ(run("body mgon --m 5 --scale 0.48 -o " + path("p.json")), 0);
    ASSERT_EQ(run("measure --body " + path("p.json") + " --design cov-grid --k 8 --noise none -o " + path("g.json")), 0);
    EXPECT_EQ(load("g.json")["values"].size(), 289u);
    ASSERT_EQ(run("measure --body " + path("p.json") + " --design cov-blaschke --k 10 -o " + path("b.json")), 0);
    EXPECT_EQ(load("b.json")["values"].size(), 2000u);
    ASSERT_EQ(run("measure --body " + path("p.json") + " --design mod --k 8 --gamma 0.75 -o " + path("m.json")), 0);
    EXPECT_EQ(load("m.json")["values"].size(), 290u);
    EXPECT_EQ(run("measure --body " + path("p.json") + " --design mod2 --k 8 --gamma 0.5"), 2);
    EXPECT_EQ(run("measure --body " + path("missing.json")), 4);
}

TEST_F(Cli, MeasurementsReloadExactly) {
    ASSERT_EQ(run("body random --vertices 6 --seed 9 -o " + path("p.json")), 0);
    ASSERT_EQ(run("measure --body " + path("p.json") + " --design cov-grid --k 6 --noise gaussian --sigma 0.01 --seed 4 -o " +
                  path("g.json")),
              0);
    const auto ms = covrec::io::load_measurements(path("g.json"));
    const auto again = covrec::gen_cov_grid(covrec::io::load_body(path("p.json")), 6, covrec::NoiseModel::gaussian(0.01), 4);
    EXPECT_EQ(ms.values, again.values);
}

TEST_F(Cli, ReconstructFromFiles) {
    ASSERT_EQ(run("body square -o " + path("sq.json")), 0);
    const std::string body = " --body " + path("sq.json");
    ASSERT_EQ(run("measure" + body + " --design cov-blaschke --k 8 --directions 16 --seed 1 -o " + path("f.json")), 0);
    ASSERT_EQ(run("measure" + body + " --design cov-grid --k 8 --seed 2 -o " + path("s.json")), 0);
    ASSERT_EQ(run("reconstruct --first " + path("f.json") + " --second " + path("s.json") + " --truth " + path("sq.json") +
                  " --svg " + path("r.svg") + " -o " + path("r.json")),
              0);
    const json r = load("r.json");
    EXPECT_EQ(r["schema"], "report/1");
    EXPECT_LE(r["error_to_truth"].get<double>(), 0.05);
    EXPECT_NE(text("r.svg").find("<svg"), std::string::npos);

    // Reruns are byte-identical, figure included.
    ASSERT_EQ(run("reconstruct --first " + path("f.json") + " --second " + path("s.json") + " --truth " + path("sq.json") +
                  " --svg " + path("r2.svg") + " -o " + path("r2.json")),
              0);
    EXPECT_EQ(text("r.json"), text("r2.json"));
    EXPECT_EQ(text("r.svg"), text("r2.svg"));

    // One seed for both stages, or differing k, is a configuration error.
    ASSERT_EQ(run("measure" + body + " --design cov-grid --k 8 --seed 1 -o " + path("s1.json")), 0);
    EXPECT_EQ(run("reconstruct --first-stage diff --first " + path("s1.json") + " --second " + path("s1.json")), 2);
    ASSERT_EQ(run("measure" + body + " --design cov-grid --k 6 --seed 3 -o " + path("s6.json")), 0);
    EXPECT_EQ(run("reconstruct --first " + path("f.json") + " --second " + path("s6.json")), 2);
    EXPECT_EQ(run("reconstruct --first " + path("f.json")), 2);
}

TEST_F(Cli, ReconstructionFailureExitCode) {
    ASSERT_EQ(run("body square -o " + path("sq.json")), 0);
    EXPECT_EQ(run("reconstruct --first-stage diff --k 16 --truth " + path("sq.json")), 3);
    EXPECT_NE(text("stderr").find("first stage"), std::string::npos);
}

TEST_F(Cli, ExperimentTables) {
    {
        std::ofstream(path("empty.json")) << R"({"body": {"shape": "square"}, "ks": [], "seeds": [1]})";
    }
    ASSERT_EQ(run("experiment --config " + path("empty.json") + " --csv " + path("e.csv") + " --svg " + path("e.svg")), 0);
    EXPECT_EQ(text("e.csv"), "k,seed,error,first_stage_error,objective,wall_ms\n");
    EXPECT_FALSE(fs::exists(path("e.svg")));

    {
        std::ofstream(path("body.json")) << covrec::io::dump(covrec::io::body_to_json(covrec::unit_box()));
        std::ofstream(path("rate.json")) << R"({"body": "body.json", "ks": [32, 64],
            "seeds": [1], "pipeline": {"first_stage": "diff", "first_stage_only": true}})";
    }
    ASSERT_EQ(run("experiment --config " + path("rate.json") + " --csv " + path("r.csv") + " --svg " + path("r.svg")), 0);
    const std::string csv = text("r.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,seed,error,first_stage_error,objective,wall_ms,bound,pass");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(text("r.svg").find("<polyline"), std::string::npos);
}

TEST_F(Cli, PentagonExperimentHasFifteenRows) {
    ASSERT_EQ(run("body mgon --m 5 --scale 0.48 -o " + path("p.json")), 0);
    {
        std::ofstream(path("x.json")) << R"({"body": "p.json", "ks": [4, 8, 16], "seeds": [1, 2, 3, 4, 5],
            "pipeline": {"noise": {"kind": "gaussian", "sigma": 0.01}, "restarts": 8}})";
    }
    ASSERT_EQ(run("experiment --config " + path("x.json") + " --csv " + path("x.csv") + " --svg " + path("x.svg")), 0);
    const std::string csv = text("x.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);
    EXPECT_NE(text("x.svg").find("<polyline"), std::string::npos);
}

TEST_F(Cli, HelpAndUnknownCommand) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("frobnicate"), 2);
}
