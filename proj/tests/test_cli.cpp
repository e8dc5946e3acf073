#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"

namespace fs = std::filesystem;
using lzsim::json;

namespace {

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("lzsim_test_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write_config(const std::string& name, const json& j) const {
        const fs::path p = dir / name;
        std::ofstream(p) << j.dump();
        return p;
    }

    int run(std::vector<std::string> args) const {
        args.insert(args.begin(), "lzsim");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return lzsim::run(static_cast<int>(argv.size()), argv.data());
    }

    int run_config(const std::string& cmd, const json& cfg, const fs::path& out, std::vector<std::string> extra = {}) {
        const auto path = write_config(out.filename().string() + ".json", cfg);
        std::vector<std::string> args{cmd, "--config", path.string(), "--out", out.string()};
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream f(p);
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_F(Cli, ExactSweepReproducesLinearProbability) {
    const json cfg = {{"method", "exact"}, {"N", 10}, {"g", 0}, {"alpha", 10}, {"sample_dt", 0.1}};
    ASSERT_EQ(run_config("sweep", cfg, dir / "a"), 0);
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_NEAR(s["P_LZ"].get<double>(), 0.7304, 0.01 * 0.7304);
    EXPECT_EQ(s["schema"], lzsim::schema_version);
    EXPECT_EQ(s["config"]["N"], 10);
    const auto csv = lines(dir / "a" / "trajectory.csv");
    ASSERT_GT(csv.size(), 3u);
    EXPECT_EQ(csv[0].rfind("# lzsim schema=", 0), 0u);
    EXPECT_EQ(csv[1].rfind("t,", 0), 0u);
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
    const json base = {{"method", "exact"}, {"N", 4}, {"alpha", 1}};
    auto with = [&](const std::string& k, const json& v) {
        json j = base;
        j[k] = v;
        return j;
    };
    EXPECT_EQ(run_config("sweep", with("bogus", 1), dir / "e1"), 2);
    EXPECT_EQ(run_config("sweep", with("M", 100), dir / "e2"), 2);
    EXPECT_EQ(run_config("sweep", with("gamma", 0.1), dir / "e3"), 2);
    EXPECT_EQ(run_config("sweep", with("t_start", -5), dir / "e4"), 2);
    EXPECT_EQ(run_config("sweep", with("method", "magic"), dir / "e5"), 2);
    EXPECT_EQ(run_config("sweep", with("N", 0), dir / "e6"), 2);
    EXPECT_EQ(run_config("husimi", with("method", "meanfield"), dir / "e7"), 2);
    EXPECT_EQ(run_config("scan", base, dir / "e8"), 2);
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    EXPECT_EQ(run({"sweep", "--config", bad.string(), "--out", (dir / "e9").string()}), 2);
    EXPECT_EQ(run({"sweep", "--config", (dir / "missing.json").string()}), 2);
    EXPECT_EQ(run({"nonsense"}), 2);
}

TEST_F(Cli, NumericalFailureWritesDiagnostic) {
    const json cfg = {{"method", "exact"}, {"N", 6}, {"g", 5}, {"alpha", 0.3}, {"window_tolerance", 1e-15},
                      {"max_doublings", 1}};
    EXPECT_EQ(run_config("sweep", cfg, dir / "f"), 3);
    const auto e = read_json(dir / "f" / "error.json");
    EXPECT_EQ(e["error"], "numerical_error");
    EXPECT_EQ(e["config"]["g"], 5.0);
}

TEST_F(Cli, EnsembleRunsAreByteIdentical) {
    const json cfg = {{"method", "ensemble"}, {"N", 10}, {"g", 1}, {"alpha", 1}, {"M", 40}, {"sample_dt", 1.0}};
    ASSERT_EQ(run_config("sweep", cfg, dir / "a", {"--seed", "5", "--workers", "1"}), 0);
    ASSERT_EQ(run_config("sweep", cfg, dir / "b", {"--seed", "5", "--workers", "3"}), 0);
    ASSERT_EQ(run_config("sweep", cfg, dir / "c", {"--seed", "6"}), 0);
    EXPECT_EQ(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
    EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "c" / "trajectory.csv"));
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_EQ(s["seed"], 5);
    EXPECT_GT(s["std_error"].get<double>(), 0.0);
}

TEST_F(Cli, MasterWithoutNoiseAgreesWithExact) {
    const json exact = {{"method", "exact"}, {"N", 6}, {"g", 1}, {"alpha", 1}};
    json master = exact;
    master["method"] = "master";
    master["gamma"] = 0.0;
    ASSERT_EQ(run_config("sweep", exact, dir / "x"), 0);
    ASSERT_EQ(run_config("sweep", master, dir / "m"), 0);
    EXPECT_NEAR(read_json(dir / "x" / "summary.json")["P_LZ"].get<double>(),
                read_json(dir / "m" / "summary.json")["P_LZ"].get<double>(), 1e-6);
}

TEST_F(Cli, EmbeddedConfigReproducesOutput) {
    const json cfg = {{"method", "exact"}, {"N", 8}, {"g", 2}, {"alpha", 0.5}, {"sample_dt", 0.5}};
    ASSERT_EQ(run_config("sweep", cfg, dir / "a"), 0);
    const std::string head = lines(dir / "a" / "trajectory.csv")[0];
    const auto pos = head.find("config=");
    ASSERT_NE(pos, std::string::npos);
    const json embedded = json::parse(head.substr(pos + 7));
    ASSERT_EQ(run_config("sweep", embedded, dir / "b"), 0);
    EXPECT_EQ(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
    EXPECT_EQ(read_json(dir / "a" / "summary.json")["P_LZ"], read_json(dir / "b" / "summary.json")["P_LZ"]);
}

TEST_F(Cli, SetOverridesConfigKeys) {
    const json cfg = {{"method", "exact"}, {"N", 4}, {"g", 0}, {"alpha", 2}};
    ASSERT_EQ(run_config("sweep", cfg, dir / "a", {"--set", "g=1.5", "--set", "readout=diabatic"}), 0);
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_EQ(s["config"]["g"], 1.5);
    EXPECT_EQ(s["config"]["readout"], "diabatic");
    EXPECT_EQ(run_config("sweep", cfg, dir / "b", {"--set", "novalue"}), 2);
}

TEST_F(Cli, ScanRowsCarryStatusAndIgnoreWorkerCount) {
    const json cfg = {{"method", "exact"}, {"alpha", 1}, {"scan", {{"N", {0, 4}}, {"g", {0, 1}}}}};
    ASSERT_EQ(run_config("scan", cfg, dir / "a", {"--workers", "1"}), 0);
    ASSERT_EQ(run_config("scan", cfg, dir / "b", {"--workers", "3"}), 0);
    EXPECT_EQ(slurp(dir / "a" / "scan.csv"), slurp(dir / "b" / "scan.csv"));
    const auto rows = lines(dir / "a" / "scan.csv");
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[1].rfind("alpha,g,N,gamma,initial_mode,status,P_LZ", 0), 0u);
    int invalid = 0, ok = 0;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        invalid += rows[i].find(",invalid,") != std::string::npos;
        ok += rows[i].find(",ok,") != std::string::npos;
    }
    EXPECT_EQ(invalid, 2);
    EXPECT_EQ(ok, 2);
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_EQ(s["succeeded"], 2);

    const json all_bad = {{"method", "exact"}, {"alpha", 1}, {"scan", {{"N", {0, -1}}}}};
    EXPECT_EQ(run_config("scan", all_bad, dir / "c"), 4);
}

TEST_F(Cli, NoisyMeanFieldScanOverGamma) {
    const json cfg = {{"method", "meanfield"}, {"g", -1}, {"alpha", 10}, {"scan", {{"gamma", {0.0, 0.1}}}}};
    ASSERT_EQ(run_config("scan", cfg, dir / "a"), 0);
    EXPECT_EQ(lines(dir / "a" / "scan.csv").size(), 4u);
    json wrong = cfg;
    wrong["method"] = "exact";
    EXPECT_EQ(run_config("scan", wrong, dir / "b"), 2);
}

TEST_F(Cli, SpectrumInterleavesStationaryStates) {
    const json cfg = {{"N", 6}, {"g", 5}, {"spectrum", {{"eps_min", -1}, {"eps_max", 1}, {"n_eps", 5}}}};
    ASSERT_EQ(run_config("spectrum", cfg, dir / "a"), 0);
    const auto rows = lines(dir / "a" / "spectrum.csv");
    int levels = 0, stationary = 0;
    for (const auto& r : rows) {
        levels += r.find(",level,") != std::string::npos;
        stationary += r.find(",stationary,") != std::string::npos;
    }
    EXPECT_EQ(levels, 5 * 7);
    EXPECT_GE(stationary, 5 * 2);
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_TRUE(s["swallow_tail"].get<bool>());
    EXPECT_GT(s["swallow_tail_boundary"].get<double>(), 0.0);
}

TEST_F(Cli, HusimiFrames) {
    json cfg = {{"N", 5}, {"g", 5}, {"alpha", 0.1}, {"husimi", {{"times", json::array()}}}};
    ASSERT_EQ(run_config("husimi", cfg, dir / "a"), 0);
    EXPECT_TRUE(read_json(dir / "a" / "summary.json")["frames"].empty());
    EXPECT_FALSE(fs::exists(dir / "a" / "husimi_0.csv"));

    cfg["husimi"]["times"] = {-10, 0.5};
    ASSERT_EQ(run_config("husimi", cfg, dir / "b"), 0);
    const auto side = read_json(dir / "b" / "husimi_1.json");
    EXPECT_EQ(side["time"], 0.5);
    EXPECT_LT(side["normalization_residual"].get<double>(), 1e-6);
    EXPECT_EQ(lines(dir / "b" / "husimi_0.csv").size(), 2u + 4 * 5);
}

TEST_F(Cli, SqueezingWithRevival) {
    const json cfg = {{"method", "exact"}, {"N", 20}, {"g", -5}, {"alpha", 0.1}, {"initial_mode", 2},
                      {"sample_dt", 1.0}, {"revival", {{"enabled", true}}}};
    ASSERT_EQ(run_config("squeezing", cfg, dir / "a"), 0);
    const auto s = read_json(dir / "a" / "summary.json");
    EXPECT_LT(s["final"]["xi_N_asymptotic"].get<double>(), 1.0);
    EXPECT_TRUE(s["revival"]["found"].get<bool>());
    json bad = cfg;
    bad["method"] = "master";
    EXPECT_EQ(run_config("squeezing", bad, dir / "b"), 2);
}
