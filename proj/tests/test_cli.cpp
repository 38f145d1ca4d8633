#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_support.hpp"

using aerialqp::testing::config_path;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("aerialqp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(AERIALQP_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text(out);
    r.err = read_text(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string scenario(const std::string& name) { return config_path("scenarios/" + name + ".yaml"); }

}  // namespace

TEST_F(CliTest, RunWritesIdenticalOutputsTwice) {
  const fs::path a = dir_ / "a", b = dir_ / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  const std::string base = "run --scenario " + scenario("setpoint") + " --duration 1 --out ";
  const CliResult ra = run(base + a.string());
  const CliResult rb = run(base + b.string());
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  const std::string csv = read_text(a / "setpoint.csv");
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, read_text(b / "setpoint.csv"));
  EXPECT_EQ(read_text(a / "setpoint_summary.json"), read_text(b / "setpoint_summary.json"));
  const auto js = nlohmann::json::parse(read_text(a / "setpoint_summary.json"));
  EXPECT_EQ(js["scenario"], "setpoint");
  EXPECT_EQ(js["steps"], 200);
  EXPECT_NE(ra.out.find("rmse_p_B"), std::string::npos);
}

TEST_F(CliTest, SeedAndIntegralOverrides) {
  const CliResult r = run("run --scenario " + scenario("tracking_noisy") + " --duration 0.5 --seed 99 --integral off --out " +
                          dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto js = nlohmann::json::parse(read_text(dir_ / "tracking_noisy_summary.json"));
  EXPECT_EQ(js["seed"], 99);
  EXPECT_EQ(js["integral"], false);
}

TEST_F(CliTest, MissingGainsFileIsConfigError) {
  const CliResult r = run("run --scenario " + scenario("setpoint") + " --gains " + (dir_ / "nope.yaml").string() +
                          " --out " + dir_.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("gains_path"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "setpoint.csv"));
}

TEST_F(CliTest, MissingScenarioIsConfigError) {
  const CliResult r = run("run --scenario " + (dir_ / "none.yaml").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("scenario_path"), std::string::npos) << r.err;
}

TEST_F(CliTest, ValidateDefaultModelPasses) {
  const CliResult r = run("validate --model " + config_path("model_default.yaml"));
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS mass_matrix_symmetric_positive_definite"), std::string::npos);
  EXPECT_NE(r.out.find("PASS coriolis_skew_symmetry"), std::string::npos);
  EXPECT_NE(r.out.find("PASS energy_conservation_unactuated"), std::string::npos);
  EXPECT_NE(r.out.find("PASS inverse_forward_round_trip"), std::string::npos);
}

TEST_F(CliTest, ValidateRejectsNegativeMass) {
  std::string text = read_text(config_path("model_default.yaml"));
  const auto pos = text.find("mass: 1.5");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "mass: -1.5");
  const CliResult r = run("validate --model " + write("neg.yaml", text).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("base.mass"), std::string::npos) << r.err;
}

TEST_F(CliTest, ValidateRejectsAsymmetricInertia) {
  std::string text = read_text(config_path("model_default.yaml"));
  const std::string key = "- [1.693333e-05, 2.0e-07, -1.0e-07]";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos) << "first link inertia row not found";
  text.replace(pos, key.size(), "- [1.693333e-05, 5.0e-07, -1.0e-07]");
  const CliResult r = run("validate --model " + write("asym.yaml", text).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("inertia"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const CliResult r = run("run --scenario " + scenario("setpoint") + " --bogus 1");
  EXPECT_EQ(r.code, 2);
  const CliResult bad_integral = run("run --scenario " + scenario("setpoint") + " --integral maybe");
  EXPECT_EQ(bad_integral.code, 2);
  const CliResult none = run("");
  EXPECT_EQ(none.code, 2);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const CliResult r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("ablate"), std::string::npos);
  EXPECT_NE(r.out.find("validate"), std::string::npos);
}

TEST_F(CliTest, AblationOfPerfectModelShowsNoGain) {
  const CliResult r = run("ablate --scenario " + scenario("tracking_perfect") + " --duration 12 --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "tracking_perfect_on.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "tracking_perfect_off.csv"));
  const auto js = nlohmann::json::parse(read_text(dir_ / "tracking_perfect_ablation.json"));
  const double ratio = js["ratio_off_on"]["rmse_p_E"];
  EXPECT_GE(ratio, 0.5);
  EXPECT_LE(ratio, 2.0);
  EXPECT_NE(r.out.find("integral OFF"), std::string::npos);
}
