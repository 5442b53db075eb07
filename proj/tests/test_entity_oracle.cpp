#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "pgov/entity_oracle.hpp"
#include "pgov/io.hpp"
#include "test_util.hpp"

namespace pgov {
namespace {

// 6x6 frame, left half sees point 0 (chair), right half point 1 (table),
// bottom-right corner invalid.
struct Toy {
  GlobalScene scene;
  Frame frame;
};

Toy two_region_toy() {
  Toy t;
  t.scene.categories = {"chair", "table"};
  for (int i = 0; i < 2; ++i) {
    ScenePoint p;
    p.id = i;
    p.label = i;
    t.scene.points.push_back(p);
  }
  t.frame.intrinsics = {6.0, 6.0, 2.5, 2.5, 6, 6};
  t.frame.depth = Raster<float>(6, 6, 1.0f);
  t.frame.color = Raster<Color>(6, 6, Color::Zero());
  t.frame.source_id = Raster<std::int64_t>(6, 6, 0);
  for (int v = 0; v < 6; ++v) {
    for (int u = 3; u < 6; ++u) t.frame.source_id.at(u, v) = 1;
  }
  t.frame.depth.at(5, 5) = 0.0f;
  t.frame.source_id.at(5, 5) = kNoSource;
  return t;
}

// Chebyshev distance from each valid pixel to the nearest valid pixel with a
// different reference id.
std::vector<bool> brute_force_eroded(const std::vector<std::int32_t>& ref, const std::vector<bool>& valid, int w,
                                     int h, int r) {
  std::vector<bool> out(ref.size(), false);
  for (int i = 0; i < w * h; ++i) {
    if (!valid[i] || ref[i] == kUnlabeled) continue;
    int best = 1 << 30;
    for (int j = 0; j < w * h; ++j) {
      if (!valid[j] || ref[j] == ref[i]) continue;
      best = std::min(best, std::max(std::abs(i % w - j % w), std::abs(i / w - j / w)));
    }
    out[i] = best <= r;
  }
  return out;
}

TEST(OracleTest, ZeroNoiseSingleCategory) {
  SceneSpec spec;
  ScenePrimitive wall;
  wall.kind = PrimitiveKind::kPlane;
  wall.center = Vec3(0, 0, 2);
  wall.half_extents = Vec3(3, 3, 0.01);
  wall.category = "chair";
  spec.objects = {wall};
  const GlobalScene scene = generate_scene(spec);
  const Frame f = render_frame(scene, {10.0, 10.0, 4.0, 3.0, 9, 7}, CameraPose{});
  const PixelEntityMap m = oracle_pixel_entities(f, scene, NoiseConfig{});
  EXPECT_EQ(m.vocabulary, std::vector<std::string>{"chair"});
  ASSERT_GT(f.valid_pixel_count(), 0u);
  for (std::size_t i = 0; i < m.ids.size(); ++i) EXPECT_EQ(m.ids[i], f.depth.data[i] > 0 ? 0 : kUnlabeled);
}

TEST(OracleTest, ZeroNoiseEqualsGroundTruthOnRoomFrames) {
  const GlobalScene scene = generate_scene(make_room_spec(6));
  const auto traj = generate_trajectory(scene, 6, 3);
  std::map<std::int64_t, int> label_of;
  for (const auto& p : scene.points) label_of[p.id] = p.label;
  for (const auto& pose : traj.poses) {
    const Frame f = render_frame(scene, {48.0, 48.0, 31.5, 23.5, 64, 48}, pose);
    const PixelEntityMap m = oracle_pixel_entities(f, scene, NoiseConfig{});
    std::vector<std::string> first_seen;
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
      if (f.depth.data[i] == 0.0f) {
        EXPECT_EQ(m.ids[i], kUnlabeled);
        continue;
      }
      const std::string& gt = scene.categories[label_of.at(f.source_id.data[i])];
      ASSERT_NE(m.ids[i], kUnlabeled);
      EXPECT_EQ(m.vocabulary[m.ids[i]], gt);
      if (std::find(first_seen.begin(), first_seen.end(), gt) == first_seen.end()) first_seen.push_back(gt);
    }
    EXPECT_EQ(m.vocabulary, first_seen);
  }
}

TEST(OracleTest, FullDropoutLeavesNothing) {
  const Toy t = two_region_toy();
  NoiseConfig n;
  n.category_dropout_prob = 1.0;
  const PixelEntityMap m = oracle_pixel_entities(t.frame, t.scene, n);
  EXPECT_TRUE(m.vocabulary.empty());
  EXPECT_EQ(m.labeled_count(), 0u);
}

TEST(OracleTest, ErosionMatchesBruteForceOnToyMask) {
  const Toy t = two_region_toy();
  NoiseConfig n;
  n.boundary_erosion_px = 1;
  const PixelEntityMap clean = oracle_pixel_entities(t.frame, t.scene, NoiseConfig{});
  const PixelEntityMap m = oracle_pixel_entities(t.frame, t.scene, n);
  std::vector<bool> valid(36);
  for (int i = 0; i < 36; ++i) valid[i] = t.frame.depth.data[i] > 0;
  const auto eroded = brute_force_eroded(clean.ids, valid, 6, 6, 1);
  for (int i = 0; i < 36; ++i) EXPECT_EQ(m.ids[i], eroded[i] ? kUnlabeled : clean.ids[i]) << i;
  for (int v = 0; v < 6; ++v) {
    EXPECT_EQ(m.at(1, v), clean.at(1, v));
    EXPECT_EQ(m.at(2, v), kUnlabeled);
    EXPECT_EQ(m.at(3, v), kUnlabeled);
  }
}

TEST(ErodeTest, RandomMasksMatchBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 4 + trial % 5, h = 3 + trial % 4, r = trial % 3;
    std::uniform_int_distribution<int> id(-1, 2);
    std::bernoulli_distribution ok(0.85);
    PixelEntityMap m = PixelEntityMap::unlabeled(w, h);
    m.vocabulary = {"a", "b", "c"};
    std::vector<bool> valid(w * h);
    for (int i = 0; i < w * h; ++i) {
      valid[i] = ok(rng);
      m.ids[i] = valid[i] ? id(rng) : kUnlabeled;
    }
    const auto ref = m.ids;
    erode_label_boundaries(m, ref, valid, r);
    const auto eroded = brute_force_eroded(ref, valid, w, h, r);
    for (int i = 0; i < w * h; ++i) EXPECT_EQ(m.ids[i], eroded[i] ? kUnlabeled : ref[i]);
  }
}

TEST(OracleTest, ErosionIsMonotone) {
  const GlobalScene scene = generate_scene(make_room_spec(2));
  const auto traj = generate_trajectory(scene, 3, 3);
  for (const auto& pose : traj.poses) {
    const Frame f = render_frame(scene, {48.0, 48.0, 31.5, 23.5, 64, 48}, pose);
    std::size_t prev = SIZE_MAX;
    for (int r = 0; r <= 4; ++r) {
      const NoiseConfig n{0.2, 0.1, r, 5};
      const std::size_t c = oracle_pixel_entities(f, scene, n).labeled_count();
      EXPECT_LE(c, prev);
      prev = c;
    }
  }
}

TEST(OracleTest, Deterministic) {
  const GlobalScene scene = generate_scene(make_room_spec(2));
  const auto traj = generate_trajectory(scene, 1, 3);
  const Frame f = render_frame(scene, {48.0, 48.0, 31.5, 23.5, 64, 48}, traj.poses[0]);
  const NoiseConfig n{0.3, 0.2, 1, 11};
  EXPECT_EQ(oracle_pixel_entities(f, scene, n), oracle_pixel_entities(f, scene, n));
}

TEST(OracleTest, MislabelMovesPixelsToOtherEntities) {
  const Toy t = two_region_toy();
  NoiseConfig n;
  n.pixel_mislabel_prob = 1.0;
  const PixelEntityMap clean = oracle_pixel_entities(t.frame, t.scene, NoiseConfig{});
  const PixelEntityMap m = oracle_pixel_entities(t.frame, t.scene, n);
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (clean.ids[i] == kUnlabeled) continue;
    EXPECT_NE(m.ids[i], clean.ids[i]);
    EXPECT_NE(m.ids[i], kUnlabeled);
  }
}

TEST(OracleTest, MissingProvenance) {
  Toy t = two_region_toy();
  t.frame.source_id = Raster<std::int64_t>();
  try {
    oracle_pixel_entities(t.frame, t.scene, NoiseConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissingProvenance);
  }
}

TEST(OracleTest, InvalidProbabilityRejected) {
  const Toy t = two_region_toy();
  NoiseConfig n;
  n.category_dropout_prob = 1.5;
  EXPECT_THROW(oracle_pixel_entities(t.frame, t.scene, n), Error);
}

void write_mask(const std::filesystem::path& p, const std::vector<std::int16_t>& ids) {
  std::string bytes(ids.size() * 2, '\0');
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(ids[i]);
    bytes[2 * i] = static_cast<char>(u & 0xff);
    bytes[2 * i + 1] = static_cast<char>(u >> 8);
  }
  write_file_atomic(p, bytes);
}

TEST(IngestTest, TwoByTwoMask) {
  testing::TempDir dir;
  write_mask(dir.path() / "m.entmask", {0, 0, 1, -1});
  write_file_atomic(dir.path() / "v.json", R"(["wall", "door"])");
  const PixelEntityMap m = ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2);
  EXPECT_EQ(m.labeled_count(), 3u);
  EXPECT_EQ(m.ids, (std::vector<std::int32_t>{0, 0, 1, -1}));
  EXPECT_EQ(m.vocabulary, (std::vector<std::string>{"wall", "door"}));
}

TEST(IngestTest, IdBeyondVocabulary) {
  testing::TempDir dir;
  write_mask(dir.path() / "m.entmask", {0, 5, 1, -1});
  write_file_atomic(dir.path() / "v.json", R"(["wall", "door"])");
  try {
    ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kVocabMismatch);
  }
}

TEST(IngestTest, TruncatedMask) {
  testing::TempDir dir;
  write_mask(dir.path() / "m.entmask", {0, 0, 1});
  write_file_atomic(dir.path() / "v.json", R"(["wall", "door"])");
  try {
    ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 6u);
  }
}

TEST(IngestTest, BadVocabularyJson) {
  testing::TempDir dir;
  write_mask(dir.path() / "m.entmask", {0, 0, 1, -1});
  write_file_atomic(dir.path() / "v.json", R"(["wall", 3])");
  EXPECT_THROW(ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2), FormatError);
  write_file_atomic(dir.path() / "v.json", R"(["wall", "wall"])");
  EXPECT_THROW(ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2), Error);
}

TEST(IngestTest, NegativeIdBelowSentinel) {
  testing::TempDir dir;
  write_mask(dir.path() / "m.entmask", {0, -3, 1, -1});
  write_file_atomic(dir.path() / "v.json", R"(["wall", "door"])");
  EXPECT_THROW(ingest_external_masks(dir.path() / "m.entmask", dir.path() / "v.json", 2, 2), Error);
}

TEST(IngestTest, OracleOutputRoundTrips) {
  testing::TempDir dir;
  const Toy t = two_region_toy();
  const PixelEntityMap m = oracle_pixel_entities(t.frame, t.scene, NoiseConfig{0.0, 0.0, 1, 0});
  write_entity_map(dir.path(), 3, m);
  EXPECT_EQ(read_entity_map(dir.path(), 3, 6, 6), m);
}

}  // namespace
}  // namespace pgov
