#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class ApctlTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "ap_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream(root_ / "tiny.json") << R"({
      "seed": 3,
      "output": ")" << (root_ / "run").string() << R"(",
      "iterations": 2,
      "episode_steps": 16,
      "mpc": {"solver": {"restarts": 0}},
      "teacher": {"samples": 5},
      "network": {"layers": 1, "hidden": 4, "head_units": 4},
      "training": {"epochs": 1, "truncation": 8, "burn_in": 4},
      "decision": {"samples": 5},
      "evaluation": {"rollouts": 2, "steps": 24}
    })";
  }

  static int run(const std::string& args) {
    const std::string cmd = std::string(APCTL_PATH) + " " + args + " > " + (root_ / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static std::string config() { return "--config " + (root_ / "tiny.json").string(); }

  static inline fs::path root_;
};

TEST_F(ApctlTest, TrainWritesArtifacts) {
  ASSERT_EQ(run("train " + config() + " --mode il"), 0) << slurp(root_ / "last.log");
  const fs::path il = root_ / "run" / "il";
  for (const char* f : {"policy.bin", "dataset.csv", "losses.csv", "iterations.csv", "manifest.json",
                        "checkpoints/theta_001.bin", "checkpoints/theta_002.bin"})
    EXPECT_TRUE(fs::exists(il / f)) << f;

  ASSERT_EQ(run("train " + config() + " --mode sl"), 0) << slurp(root_ / "last.log");
  auto lines = [](const fs::path& p) {
    std::ifstream is(p);
    std::string l;
    std::size_t n = 0;
    while (std::getline(is, l)) ++n;
    return n;
  };
  EXPECT_EQ(lines(il / "dataset.csv"), 33u);
  EXPECT_EQ(lines(root_ / "run" / "sl" / "dataset.csv"), lines(il / "dataset.csv"));
}

TEST_F(ApctlTest, EvaluateIsByteIdenticalOnRerun) {
  ASSERT_EQ(run("train " + config() + " --mode il"), 0);
  const fs::path a = root_ / "eval_a", b = root_ / "eval_b";
  ASSERT_EQ(run("evaluate " + config() + " --policy slp-a --out " + a.string()), 0) << slurp(root_ / "last.log");
  ASSERT_EQ(run("evaluate " + config() + " --policy slp-a --out " + b.string()), 0);
  for (const char* f : {"metrics.csv", "summary.txt", "rollout_1003.csv", "rollout_1004.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "manifest.json"));

  const fs::path c = root_ / "compare";
  ASSERT_EQ(run("compare " + a.string() + " " + b.string() + " --alpha 0.005 --out " + c.string()), 0)
      << slurp(root_ / "last.log");
  const std::string csv = slurp(c / "report.csv");
  EXPECT_NE(csv.find("sign_test"), std::string::npos);
  EXPECT_EQ(csv.find(",1\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(c / "report.txt"));
}

TEST_F(ApctlTest, MpcEvaluationNeedsNoCheckpoint) {
  EXPECT_EQ(run("evaluate " + config() + " --policy mpc-si --rollouts 1 --out " + (root_ / "mpc").string()), 0)
      << slurp(root_ / "last.log");
  EXPECT_TRUE(fs::exists(root_ / "mpc" / "rollout_1003.csv"));
}

TEST_F(ApctlTest, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run("evaluate " + config() + " --policy pid"), 2);
  EXPECT_EQ(run("evaluate " + config() + " --policy dlp --checkpoint " + (root_ / "missing.bin").string()), 2);
  EXPECT_EQ(run("train --config " + (root_ / "nope.json").string()), 2);
  std::ofstream(root_ / "bad.json") << R"({"network": {"hidden": "wide"}})";
  EXPECT_EQ(run("train --config " + (root_ / "bad.json").string()), 2);
  EXPECT_NE(slurp(root_ / "last.log").find("$.network.hidden"), std::string::npos);
  EXPECT_EQ(run("train " + config() + " --patient elderly"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(ApctlTest, ArchitectureMismatchIsAConfigError) {
  ASSERT_EQ(run("train " + config() + " --mode il"), 0);
  std::ofstream(root_ / "wide.json") << R"({"network": {"layers": 1, "hidden": 8, "head_units": 4}})";
  EXPECT_EQ(run("evaluate --config " + (root_ / "wide.json").string() + " --policy dlp --checkpoint " +
                (root_ / "run/il/policy.bin").string() + " --out " + (root_ / "wide").string()),
            2);
}

TEST_F(ApctlTest, RuntimeFailuresExitWithThree) {
  std::ofstream(root_ / "blocker") << "x";
  EXPECT_EQ(run("evaluate " + config() + " --policy mpc-si --rollouts 1 --out " + (root_ / "blocker" / "sub").string()),
            3);
}

}  // namespace
