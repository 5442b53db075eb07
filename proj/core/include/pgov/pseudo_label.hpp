#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pgov/common.hpp"
#include "pgov/embedding.hpp"

namespace pgov {

struct SceneVocabulary {
  std::vector<std::string> entities;
  std::map<std::string, std::vector<int>> provenance;  // entity -> frame indices
};

struct FrameVocabulary {
  int frame_index = 0;
  std::vector<std::string> entities;
};

// Ordered union, first appearance across ascending frame index.
SceneVocabulary aggregate_vocabulary(std::span<const FrameVocabulary> frame_vocabs);
SceneVocabulary aggregate_vocabulary(const std::vector<std::vector<std::string>>& frame_vocabs);

// One uniformly chosen point per occupied voxel (key = floor(p / size)),
// returned in ascending index order.
std::vector<std::size_t> voxel_subsample(std::span<const Vec3> positions, double voxel_size_m, std::uint64_t seed);

// p_ij = softmax_j(cos(f_i, t_j) / tau).
RowMatrix predict_distribution(const RowMatrix& features, const RowMatrix& entity_embeddings, double tau);
RowMatrix predict_distribution(const EncoderParams& params, const RowMatrix& inputs,
                               const RowMatrix& entity_embeddings, double tau);

struct PseudoLabelConfig {
  double voxel_size = 0.05;
  int repetitions = 8;
  double temperature = 0.07;
  double confidence_threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const PseudoLabelConfig&) const = default;
};

struct PseudoLabelSet {
  RowMatrix probabilities;            // N x |C|
  std::vector<std::int32_t> entity;   // argmax, lowest index on ties
  std::vector<double> confidence;     // max averaged probability
  std::vector<std::uint8_t> accepted;
  std::vector<std::uint32_t> samples; // repetitions in which the point was drawn
  PseudoLabelConfig config;

  std::size_t size() const { return entity.size(); }
  std::size_t accepted_count() const;
};

// Distribution over entities for the points in `subset` (rows follow the
// subset order). Gets the sampled subset so context-aware models can use it.
using SubsetPredictor = std::function<RowMatrix(std::span<const std::size_t> subset)>;

// Repeated grid sampling: R voxel subsamples, per-point mean of the
// predicted distributions over the repetitions that drew the point, a
// single full-cloud prediction for points never drawn, then argmax and the
// confidence threshold.
PseudoLabelSet generate_pseudo_labels(std::span<const Vec3> positions, std::size_t num_entities,
                                      const SubsetPredictor& predict, const PseudoLabelConfig& config);

// Encoder-backed variant: features from `params` on `inputs`, entities from
// `vocabulary` embedded by `embeddings`.
PseudoLabelSet generate_pseudo_labels(std::span<const Vec3> positions, const RowMatrix& inputs,
                                      const EncoderParams& params, std::span<const std::string> vocabulary,
                                      const TextEmbeddingTable& embeddings, const PseudoLabelConfig& config);

// Points whose confidence clears the threshold flip `accepted`; used to
// rescore an existing set without resampling.
void apply_confidence_threshold(PseudoLabelSet& labels, double threshold);

}  // namespace pgov
