#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "pgov/io.hpp"
#include "pgov/metrics.hpp"
#include "pgov/pseudo_label.hpp"
#include "smoothing_oracle.hpp"
#include "test_util.hpp"

namespace pgov {
namespace {

using testing::random_matrix;

TEST(AggregateVocabularyTest, FirstAppearanceUnion) {
  const SceneVocabulary v = aggregate_vocabulary({{"chair", "table"}, {"table", "lamp"}});
  EXPECT_EQ(v.entities, (std::vector<std::string>{"chair", "table", "lamp"}));
  EXPECT_EQ(v.provenance.at("table"), (std::vector<int>{0, 1}));
  EXPECT_EQ(v.provenance.at("lamp"), (std::vector<int>{1}));
}

TEST(AggregateVocabularyTest, EmptyFrames) {
  EXPECT_TRUE(aggregate_vocabulary({{}, {}}).entities.empty());
}

TEST(AggregateVocabularyTest, SortsByFrameIndex) {
  const std::vector<FrameVocabulary> frames{{7, {"door"}}, {2, {"wall", "door"}}};
  const SceneVocabulary v = aggregate_vocabulary(frames);
  EXPECT_EQ(v.entities, (std::vector<std::string>{"wall", "door"}));
  EXPECT_EQ(v.provenance.at("door"), (std::vector<int>{2, 7}));
}

TEST(VoxelSubsampleTest, CoVoxelPointsCollapse) {
  const std::vector<Vec3> p{Vec3(0.01, 0.01, 0.01), Vec3(0.02, 0.03, 0.04), Vec3(0.04, 0.04, 0.0)};
  EXPECT_EQ(voxel_subsample(p, 0.05, 1).size(), 1u);
}

TEST(VoxelSubsampleTest, DistinctVoxelsKeepEverything) {
  const std::vector<Vec3> p{Vec3(0.3, 0, 0), Vec3(0, 0, 0), Vec3(-0.1, 0, 0), Vec3(0, 0.2, 0)};
  EXPECT_EQ(voxel_subsample(p, 0.05, 9), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(VoxelSubsampleTest, UniformChoiceWithinVoxel) {
  const std::vector<Vec3> p{Vec3(0.01, 0.01, 0.01), Vec3(0.02, 0.03, 0.04), Vec3(0.04, 0.04, 0.0)};
  std::vector<int> count(3, 0);
  for (std::uint64_t s = 0; s < 10000; ++s) count[voxel_subsample(p, 0.05, s)[0]]++;
  for (int c : count) EXPECT_NEAR(c / 10000.0, 1.0 / 3.0, 0.02);
}

TEST(VoxelSubsampleTest, SortedOneLeaderPerVoxelDeterministic) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<Vec3> p;
  for (int i = 0; i < 500; ++i) p.emplace_back(U(rng), U(rng), U(rng));
  const auto a = voxel_subsample(p, 0.2, 4);
  EXPECT_EQ(a, voxel_subsample(p, 0.2, 4));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  std::set<std::tuple<long, long, long>> all, chosen;
  for (const auto& q : p) all.insert({std::lround(std::floor(q.x() / 0.2)), std::lround(std::floor(q.y() / 0.2)), std::lround(std::floor(q.z() / 0.2))});
  for (auto i : a) {
    const auto& q = p[i];
    EXPECT_TRUE(chosen.insert({std::lround(std::floor(q.x() / 0.2)), std::lround(std::floor(q.y() / 0.2)), std::lround(std::floor(q.z() / 0.2))}).second);
  }
  EXPECT_EQ(chosen, all);
  EXPECT_THROW(voxel_subsample(p, 0.0, 1), Error);
}

TEST(PredictDistributionTest, SingleEntity) {
  std::mt19937_64 rng(3);
  const RowMatrix p = predict_distribution(random_matrix(5, 4, rng), random_matrix(1, 4, rng), 0.07);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(p(i, 0), 1.0);
}

TEST(PredictDistributionTest, EqualCosineSplitsEvenly) {
  RowMatrix f(1, 2), e(2, 2);
  f << 1, 1;
  e << 1, 0, 0, 1;
  const RowMatrix p = predict_distribution(f, e, 0.07);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(PredictDistributionTest, UnitTemperatureSoftmax) {
  RowMatrix f(1, 2), e(2, 2);
  f << 1, 0;
  e << 1, 0, 0, 1;
  const RowMatrix p = predict_distribution(f, e, 1.0);
  EXPECT_NEAR(p(0, 0), std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(p(0, 0), 0.7311, 5e-5);
  EXPECT_NEAR(p(0, 1), 0.2689, 5e-5);
}

TEST(PredictDistributionTest, RowsSumToOne) {
  std::mt19937_64 rng(4);
  const RowMatrix p = predict_distribution(random_matrix(100, 8, rng), random_matrix(6, 8, rng), 0.07);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
    EXPECT_GE(p.row(i).minCoeff(), 0.0);
  }
}

TEST(PredictDistributionTest, EmptyVocabulary) {
  try {
    predict_distribution(RowMatrix::Ones(2, 3), RowMatrix(0, 3), 0.07);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyVocabulary);
  }
}

TEST(PredictDistributionTest, ArgmaxMatchesSegmentation) {
  std::mt19937_64 rng(5);
  const RowMatrix f = random_matrix(300, 8, rng), e = random_matrix(7, 8, rng);
  const RowMatrix p = predict_distribution(f, e, 0.07);
  const auto seg = segment_scene(f, e);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best;
    p.row(i).maxCoeff(&best);
    EXPECT_EQ(seg[i], best);
  }
}

struct EncoderScene {
  std::vector<Vec3> positions;
  RowMatrix inputs;
  EncoderParams params;
  std::vector<std::string> vocab{"wall", "chair", "table"};
  TextEmbeddingTable table = embed_entities(vocab, 8, 3);
};

EncoderScene random_encoder_scene(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  EncoderScene s;
  for (int i = 0; i < n; ++i) s.positions.emplace_back(U(rng), U(rng), U(rng));
  s.inputs = random_matrix(n, 6, rng);
  s.params = EncoderParams::initialize({6, 8, 8}, seed);
  return s;
}

TEST(GeneratePseudoLabelsTest, SingleRepetitionTinyVoxelsIsFullPrediction) {
  const EncoderScene s = random_encoder_scene(6, 80);
  PseudoLabelConfig c;
  c.voxel_size = 1e-4;
  c.repetitions = 1;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  const RowMatrix full = predict_distribution(s.params, s.inputs, s.table.matrix(s.vocab), c.temperature);
  EXPECT_TRUE(l.probabilities.isApprox(full, 1e-14));
  for (auto n : l.samples) EXPECT_EQ(n, 1u);
}

TEST(GeneratePseudoLabelsTest, PerfectEncoderRecoversGroundTruth) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  const std::vector<std::string> vocab{"wall", "floor", "chair", "sofa"};
  const TextEmbeddingTable table = embed_entities(vocab, 16, 11);
  const RowMatrix emb = table.matrix(vocab);
  std::vector<Vec3> pos;
  std::vector<int> gt;
  for (int i = 0; i < 200; ++i) {
    pos.emplace_back(U(rng), U(rng), U(rng));
    gt.push_back(static_cast<int>(rng() % 4));
  }
  SubsetPredictor lookup = [&](std::span<const std::size_t> subset) {
    RowMatrix f(static_cast<Eigen::Index>(subset.size()), 16);
    for (std::size_t k = 0; k < subset.size(); ++k) f.row(k) = emb.row(gt[subset[k]]);
    return predict_distribution(f, emb, 0.07);
  };
  PseudoLabelConfig c;
  c.voxel_size = 0.2;
  const PseudoLabelSet l = generate_pseudo_labels(pos, 4, lookup, c);
  for (std::size_t i = 0; i < l.size(); ++i) {
    EXPECT_EQ(l.entity[i], gt[i]);
    EXPECT_TRUE(l.accepted[i]);
    const RowMatrix single = lookup(std::vector<std::size_t>{i});
    EXPECT_NEAR(l.confidence[i], single.maxCoeff(), 1e-12);
  }
}

TEST(GeneratePseudoLabelsTest, ThreeCoVoxelPointsMatchEnumeration) {
  // Points 0..2 share a voxel, 3 sits alone; each point's logit for entity 1
  // grows with the index of the co-voxel point drawn alongside it.
  const std::vector<Vec3> pos{Vec3(0.1, 0.1, 0.1), Vec3(0.2, 0.3, 0.1), Vec3(0.4, 0.2, 0.3), Vec3(1.5, 0.5, 0.5)};
  auto dist = [](std::size_t self, std::size_t partner) {
    const double z = 0.5 * static_cast<double>(self) + 0.8 * static_cast<double>(partner) - 1.0;
    RowMatrix p(1, 2);
    p << 1 / (1 + std::exp(z)), 1 / (1 + std::exp(-z));
    return p;
  };
  SubsetPredictor predict = [&](std::span<const std::size_t> subset) {
    RowMatrix out(static_cast<Eigen::Index>(subset.size()), 2);
    for (std::size_t k = 0; k < subset.size(); ++k) {
      std::size_t partner = 0;
      for (std::size_t q : subset) {
        if (q != subset[k]) partner = q == 3 ? 0 : q;
      }
      out.row(k) = dist(subset[k], partner);
    }
    return out;
  };
  RowMatrix exact = RowMatrix::Zero(4, 2);
  for (std::size_t pick = 0; pick < 3; ++pick) {
    exact.row(pick) = dist(pick, 0);
    exact.row(3) += dist(3, pick) / 3.0;
  }
  PseudoLabelConfig c;
  c.voxel_size = 1.0;
  c.repetitions = 500;
  c.seed = 21;
  const PseudoLabelSet l = generate_pseudo_labels(pos, 2, predict, c);
  EXPECT_LE((l.probabilities - exact).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_EQ(l.samples[3], 500u);
}

TEST(GeneratePseudoLabelsTest, ContextPredictorConvergesToExpectation) {
  const testing::SmoothingInstance s = testing::make_smoothing_instance();
  PseudoLabelConfig c;
  c.voxel_size = s.voxel;
  c.repetitions = 500;
  c.seed = 3;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, 3, testing::smoothing_predictor(s), c);
  EXPECT_LE((l.probabilities - testing::exact_expectation(s)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(GeneratePseudoLabelsTest, CoverageAndNormalization) {
  const EncoderScene s = random_encoder_scene(8, 400);
  PseudoLabelConfig c;
  c.voxel_size = 0.3;
  c.repetitions = 2;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  ASSERT_EQ(l.size(), 400u);
  std::size_t never = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    EXPECT_NEAR(l.probabilities.row(i).sum(), 1.0, 1e-9);
    EXPECT_GE(l.probabilities.row(i).minCoeff(), 0.0);
    EXPECT_EQ(l.confidence[i], l.probabilities.row(i).maxCoeff());
    EXPECT_EQ(l.accepted[i] != 0, l.confidence[i] >= c.confidence_threshold);
    never += l.samples[i] == 0;
  }
  EXPECT_GT(never, 0u);
}

TEST(GeneratePseudoLabelsTest, FallbackPointsMatchSegmentation) {
  const EncoderScene s = random_encoder_scene(9, 300);
  PseudoLabelConfig c;
  c.voxel_size = 0.5;
  c.repetitions = 1;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  const auto seg = segment_scene(encode_points(s.params, s.inputs), s.table.matrix(s.vocab));
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l.samples[i] == 0) EXPECT_EQ(l.entity[i], seg[i]);
  }
}

TEST(GeneratePseudoLabelsTest, RaisingThresholdNeverAccepts) {
  const EncoderScene s = random_encoder_scene(10, 300);
  PseudoLabelConfig c;
  c.voxel_size = 0.2;
  PseudoLabelSet l = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  std::vector<std::uint8_t> prev(l.size(), 1);
  for (double t : {0.0, 0.3, 0.4, 0.5, 0.7, 0.9, 1.0}) {
    apply_confidence_threshold(l, t);
    for (std::size_t i = 0; i < l.size(); ++i) EXPECT_LE(l.accepted[i], prev[i]);
    prev = l.accepted;
  }
}

TEST(GeneratePseudoLabelsTest, DeterministicPerSeed) {
  const EncoderScene s = random_encoder_scene(11, 200);
  PseudoLabelConfig c;
  c.voxel_size = 0.2;
  c.seed = 5;
  const auto a = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  const auto b = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  EXPECT_EQ(format_pseudo_labels(a), format_pseudo_labels(b));
  c.seed = 6;
  const auto d = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  EXPECT_NE(a.samples, d.samples);
}

TEST(GeneratePseudoLabelsTest, EmptyVocabularyAndBadConfig) {
  const EncoderScene s = random_encoder_scene(12, 10);
  SubsetPredictor none = [](std::span<const std::size_t> subset) { return RowMatrix(subset.size(), 0); };
  try {
    generate_pseudo_labels(s.positions, 0, none, PseudoLabelConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyVocabulary);
  }
  PseudoLabelConfig c;
  c.repetitions = 0;
  EXPECT_THROW(generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c), Error);
}

TEST(PseudoLabelFileTest, RoundTrip) {
  const EncoderScene s = random_encoder_scene(13, 50);
  PseudoLabelConfig c;
  c.voxel_size = 0.2;
  c.seed = 77;
  const PseudoLabelSet l = generate_pseudo_labels(s.positions, s.inputs, s.params, s.vocab, s.table, c);
  const std::string bytes = format_pseudo_labels(l);
  EXPECT_EQ(bytes.size(), 8u + 4 + 8 + 4 + 8 + 8 + 8 + 50 * 9);
  const PseudoLabelSet r = parse_pseudo_labels(bytes);
  EXPECT_EQ(r.entity, l.entity);
  EXPECT_EQ(r.accepted, l.accepted);
  EXPECT_EQ(r.config, l.config);
  for (std::size_t i = 0; i < l.size(); ++i) EXPECT_EQ(r.confidence[i], static_cast<float>(l.confidence[i]));
  EXPECT_EQ(format_pseudo_labels(r), bytes);
  EXPECT_THROW(parse_pseudo_labels(bytes.substr(0, bytes.size() - 1)), FormatError);
}

}  // namespace
}  // namespace pgov
