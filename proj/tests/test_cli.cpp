#include <filesystem>

#include <gtest/gtest.h>

#include "pgov/io.hpp"
#include "pgov_cli/cli.hpp"
#include "test_util.hpp"

namespace pgov {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = dir_.path() / "tiny.json";
    write_file_atomic(config_, serialize_config(testing::tiny_config()));
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "pgov");
    ::testing::internal::CaptureStderr();
    ::testing::internal::CaptureStdout();
    const int code = cli::run_subcommand(args);
    stdout_ = ::testing::internal::GetCapturedStdout();
    stderr_ = ::testing::internal::GetCapturedStderr();
    return code;
  }

  TempDir dir_;
  fs::path config_;
  std::string stdout_, stderr_;
};

TEST_F(CliTest, ExperimentHappyPath) {
  const fs::path out = dir_.path() / "run";
  EXPECT_EQ(run({"experiment", "--config", config_.string(), "--preset", "full_curriculum", "--out", out.string()}),
            cli::kExitOk)
      << stderr_;
  EXPECT_NE(stdout_.find("mIoU"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "eval_report.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
}

TEST_F(CliTest, StagesChainThroughOutDir) {
  const std::string out = (dir_.path() / "staged").string();
  for (const char* stage : {"synth", "render", "oracle", "pretrain", "pseudolabel", "finetune", "eval", "report"}) {
    EXPECT_EQ(run({stage, "--config", config_.string(), "--out", out}), cli::kExitOk) << stage << ": " << stderr_;
  }
  EXPECT_TRUE(fs::exists(fs::path(out) / "loss_curves.svg"));
}

TEST_F(CliTest, NegativeLearningRateIsConfigError) {
  write_file_atomic(config_, R"({"train": {"learning_rate": -0.01}})");
  EXPECT_EQ(run({"synth", "--config", config_.string(), "--out", (dir_.path() / "x").string()}), cli::kExitConfig);
  EXPECT_NE(stderr_.find("train.learning_rate"), std::string::npos) << stderr_;
}

TEST_F(CliTest, UnknownKeyAndBadFlags) {
  write_file_atomic(config_, R"({"scene": {"rooms": 3}})");
  EXPECT_EQ(run({"synth", "--config", config_.string()}), cli::kExitConfig);
  EXPECT_NE(stderr_.find("scene.rooms"), std::string::npos);
  EXPECT_EQ(run({"teleport"}), cli::kExitConfig);
  EXPECT_EQ(run({"experiment", "--preset", "everything", "--out", (dir_.path() / "y").string()}), cli::kExitConfig);
}

TEST_F(CliTest, TruncatedDepthBeforeEvalIsFormatError) {
  const fs::path out = dir_.path() / "run";
  ASSERT_EQ(run({"experiment", "--config", config_.string(), "--out", out.string()}), cli::kExitOk) << stderr_;
  const fs::path depth = out / "frames/scene_002/frame_000001.depth";
  ASSERT_TRUE(fs::exists(depth));
  std::string bytes = read_file(depth);
  bytes.resize(bytes.size() / 2 + 1);
  write_file_atomic(depth, bytes);
  EXPECT_EQ(run({"eval", "--config", config_.string(), "--out", out.string()}), cli::kExitFormat);
  EXPECT_NE(stderr_.find("frame_000001.depth"), std::string::npos) << stderr_;
  EXPECT_NE(stderr_.find("byte " + std::to_string(bytes.size())), std::string::npos) << stderr_;
}

TEST_F(CliTest, MissingArtifactsIsFailure) {
  EXPECT_EQ(run({"report", "--out", (dir_.path() / "empty").string()}), cli::kExitFailure);
  EXPECT_EQ(run({"pretrain", "--config", config_.string(), "--out", (dir_.path() / "empty").string()}),
            cli::kExitFailure);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const fs::path out = dir_.path() / "seeded";
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", out.string(), "--seed", "42"}), cli::kExitOk);
  EXPECT_NE(read_file(out / "manifest.json").find("\"seed\": 42"), std::string::npos);
}

}  // namespace
}  // namespace pgov
