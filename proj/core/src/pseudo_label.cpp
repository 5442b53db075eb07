#include "pgov/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace pgov {

SceneVocabulary aggregate_vocabulary(std::span<const FrameVocabulary> frame_vocabs) {
  std::vector<const FrameVocabulary*> ordered;
  for (const auto& f : frame_vocabs) ordered.push_back(&f);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const FrameVocabulary* a, const FrameVocabulary* b) { return a->frame_index < b->frame_index; });
  SceneVocabulary vocab;
  for (const FrameVocabulary* f : ordered) {
    for (const auto& e : f->entities) {
      auto [it, inserted] = vocab.provenance.try_emplace(e);
      if (inserted) vocab.entities.push_back(e);
      if (it->second.empty() || it->second.back() != f->frame_index) it->second.push_back(f->frame_index);
    }
  }
  return vocab;
}

SceneVocabulary aggregate_vocabulary(const std::vector<std::vector<std::string>>& frame_vocabs) {
  std::vector<FrameVocabulary> frames;
  frames.reserve(frame_vocabs.size());
  for (std::size_t i = 0; i < frame_vocabs.size(); ++i) frames.push_back({static_cast<int>(i), frame_vocabs[i]});
  return aggregate_vocabulary(frames);
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.x));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k.y));
    return static_cast<std::size_t>(splitmix64(h ^ static_cast<std::uint64_t>(k.z)));
  }
};

}  // namespace

std::vector<std::size_t> voxel_subsample(std::span<const Vec3> positions, double voxel_size_m, std::uint64_t seed) {
  if (!(voxel_size_m > 0.0)) throw Error(Errc::kInvalidArgument, "voxel_size must be > 0");
  struct Slot {
    std::size_t chosen = 0;
    std::uint64_t seen = 0;
  };
  std::unordered_map<VoxelKey, Slot, VoxelKeyHash> voxels;
  voxels.reserve(positions.size());
  std::mt19937_64 rng(mix_seed(seed, "voxel-subsample"));
  // Reservoir sampling in point order keeps the draw sequence independent of
  // hash-map iteration order.
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3& p = positions[i];
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size_m)),
                       static_cast<std::int64_t>(std::floor(p.y() / voxel_size_m)),
                       static_cast<std::int64_t>(std::floor(p.z() / voxel_size_m))};
    Slot& slot = voxels[key];
    ++slot.seen;
    if (slot.seen == 1 || std::uniform_int_distribution<std::uint64_t>(0, slot.seen - 1)(rng) == 0) {
      slot.chosen = i;
    }
  }
  std::vector<std::size_t> out;
  out.reserve(voxels.size());
  for (const auto& [key, slot] : voxels) out.push_back(slot.chosen);
  std::sort(out.begin(), out.end());
  return out;
}

RowMatrix predict_distribution(const RowMatrix& features, const RowMatrix& entity_embeddings, double tau) {
  if (entity_embeddings.rows() == 0) throw Error(Errc::kEmptyVocabulary, "cannot predict over an empty vocabulary");
  if (!(tau > 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be > 0");
  if (features.cols() != entity_embeddings.cols()) throw Error(Errc::kShapeMismatch, "feature and embedding widths differ");
  RowMatrix logits = features * entity_embeddings.transpose();
  const Eigen::VectorXd fn = features.rowwise().norm().cwiseMax(kNormEpsilon);
  const Eigen::VectorXd tn = entity_embeddings.rowwise().norm().cwiseMax(kNormEpsilon);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      logits(i, j) = std::clamp(logits(i, j) / (fn[i] * tn[j]), -1.0, 1.0) / tau;
    }
    const double mx = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

RowMatrix predict_distribution(const EncoderParams& params, const RowMatrix& inputs,
                               const RowMatrix& entity_embeddings, double tau) {
  return predict_distribution(encode_points(params, inputs), entity_embeddings, tau);
}

void PseudoLabelConfig::validate() const {
  if (!(voxel_size > 0.0)) throw Error(Errc::kInvalidArgument, "voxel_size must be > 0");
  if (repetitions < 1) throw Error(Errc::kInvalidArgument, "repetitions must be >= 1");
  if (!(temperature > 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be > 0");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "confidence_threshold must lie in [0, 1]");
  }
}

std::size_t PseudoLabelSet::accepted_count() const {
  return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), std::uint8_t{1}));
}

void apply_confidence_threshold(PseudoLabelSet& labels, double threshold) {
  labels.config.confidence_threshold = threshold;
  for (std::size_t i = 0; i < labels.size(); ++i) labels.accepted[i] = labels.confidence[i] >= threshold ? 1 : 0;
}

PseudoLabelSet generate_pseudo_labels(std::span<const Vec3> positions, std::size_t num_entities,
                                      const SubsetPredictor& predict, const PseudoLabelConfig& config) {
  config.validate();
  if (num_entities == 0) throw Error(Errc::kEmptyVocabulary, "scene vocabulary is empty");
  const std::size_t n = positions.size();
  const auto k = static_cast<Eigen::Index>(num_entities);

  const auto reps = static_cast<std::size_t>(config.repetitions);
  std::vector<std::vector<std::size_t>> subsets(reps);
  std::vector<RowMatrix> predictions(reps);
  parallel_for(reps, [&](std::size_t r) {
    subsets[r] = voxel_subsample(positions, config.voxel_size, mix_seed(config.seed, static_cast<std::uint64_t>(r)));
    predictions[r] = predict(subsets[r]);
    if (predictions[r].rows() != static_cast<Eigen::Index>(subsets[r].size()) || predictions[r].cols() != k) {
      throw Error(Errc::kShapeMismatch, "predictor returned the wrong shape");
    }
  });

  PseudoLabelSet out;
  out.config = config;
  out.probabilities = RowMatrix::Zero(static_cast<Eigen::Index>(n), k);
  out.samples.assign(n, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t s = 0; s < subsets[r].size(); ++s) {
      const std::size_t i = subsets[r][s];
      out.probabilities.row(static_cast<Eigen::Index>(i)) += predictions[r].row(static_cast<Eigen::Index>(s));
      ++out.samples[i];
    }
  }
  std::vector<std::size_t> uncovered;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.samples[i] > 0) {
      out.probabilities.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(out.samples[i]);
    } else {
      uncovered.push_back(i);
    }
  }
  if (!uncovered.empty()) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const RowMatrix full = predict(all);
    for (std::size_t i : uncovered) {
      out.probabilities.row(static_cast<Eigen::Index>(i)) = full.row(static_cast<Eigen::Index>(i));
    }
  }

  out.entity.resize(n);
  out.confidence.resize(n);
  out.accepted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    const auto row = out.probabilities.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out.entity[i] = static_cast<std::int32_t>(best);
    out.confidence[i] = row[best];
    out.accepted[i] = row[best] >= config.confidence_threshold ? 1 : 0;
  }
  return out;
}

PseudoLabelSet generate_pseudo_labels(std::span<const Vec3> positions, const RowMatrix& inputs,
                                      const EncoderParams& params, std::span<const std::string> vocabulary,
                                      const TextEmbeddingTable& embeddings, const PseudoLabelConfig& config) {
  if (vocabulary.empty()) throw Error(Errc::kEmptyVocabulary, "scene vocabulary is empty");
  if (static_cast<std::size_t>(inputs.rows()) != positions.size()) {
    throw Error(Errc::kShapeMismatch, "inputs and positions differ in length");
  }
  const RowMatrix entity_embeddings = embeddings.matrix(vocabulary);
  // The encoder is point-wise, so one pass serves every subset.
  const RowMatrix all_probs = predict_distribution(encode_points(params, inputs), entity_embeddings, config.temperature);
  SubsetPredictor predict = [&all_probs](std::span<const std::size_t> subset) {
    RowMatrix out(static_cast<Eigen::Index>(subset.size()), all_probs.cols());
    for (std::size_t s = 0; s < subset.size(); ++s) {
      out.row(static_cast<Eigen::Index>(s)) = all_probs.row(static_cast<Eigen::Index>(subset[s]));
    }
    return out;
  };
  return generate_pseudo_labels(positions, vocabulary.size(), predict, config);
}

}  // namespace pgov
