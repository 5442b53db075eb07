#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "pgov/common.hpp"

namespace pgov {
namespace {

TEST(StableHashTest, MatchesFnv1aReferenceValues) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(stable_hash("foobar"), 0x85944171f73967e8ULL);
}

TEST(MixSeedTest, DeterministicAndTagSensitive) {
  EXPECT_EQ(mix_seed(7, "scene"), mix_seed(7, "scene"));
  EXPECT_NE(mix_seed(7, "scene"), mix_seed(7, "oracle"));
  EXPECT_NE(mix_seed(7, 1), mix_seed(8, 1));
  EXPECT_NE(mix_seed(7, 1), mix_seed(7, 2));
}

class ParallelForTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv("PGOV_THREADS", "4", 1); }
  void TearDown() override { unsetenv("PGOV_THREADS"); }
};

TEST_F(ParallelForTest, RunsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST_F(ParallelForTest, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(50, [](std::size_t i) {
                 if (i == 17) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST_F(ParallelForTest, ZeroIterations) {
  int calls = 0;
  parallel_for(0, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(ErrorTest, MessagesNameTheCondition) {
  const Error e(Errc::kInvalidDepth, "d = 0");
  EXPECT_EQ(e.code(), Errc::kInvalidDepth);
  EXPECT_STREQ(e.what(), "InvalidDepth: d = 0");

  const FormatError f("x.depth", 12, "short read");
  EXPECT_EQ(f.code(), Errc::kFormat);
  EXPECT_EQ(f.offset(), 12u);
  EXPECT_NE(std::string(f.what()).find("x.depth"), std::string::npos);

  const ConfigError c("train.learning_rate", "must be positive");
  EXPECT_EQ(c.key(), "train.learning_rate");
}

TEST(RasterTest, RowMajorIndexing) {
  Raster<int> r(3, 2, 0);
  r.at(2, 1) = 9;
  EXPECT_EQ(r.data[5], 9);
  EXPECT_TRUE(r.contains(2, 1));
  EXPECT_FALSE(r.contains(3, 0));
  EXPECT_FALSE(r.contains(0, -1));
}

}  // namespace
}  // namespace pgov
