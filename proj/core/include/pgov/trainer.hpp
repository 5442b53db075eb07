#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pgov/common.hpp"
#include "pgov/embedding.hpp"
#include "pgov/geometry.hpp"
#include "pgov/pseudo_label.hpp"

namespace pgov {

struct TrainConfig {
  double lambda_consistency = 0.2;
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size_stage1 = 4;   // consecutive frames per step
  int batch_size_stage2 = 1;   // scenes per step
  int epochs_stage1 = 12;
  int epochs_stage2 = 6;
  std::uint64_t seed = 0;
  bool load_pretrained = true;

  void validate() const;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const EncoderParams& params);
};

struct LossRecord {
  int epoch = 0;
  int step = 0;
  double alignment = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

struct StageResult {
  EncoderParams params;
  OptimizerState optimizer;
  std::vector<LossRecord> log;
};

// Mean total loss per epoch, in epoch order.
std::vector<double> epoch_mean_totals(std::span<const LossRecord> log);

// a.b / (|a||b|), clamped to [-1, 1]. Throws ZeroVector on a zero input.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct LossAndGrad {
  double value = 0.0;
  RowMatrix grad;
};

// (1/N) sum_i (1 - cos(f_i, t_i)) and its gradient w.r.t. the features.
LossAndGrad alignment_loss(const RowMatrix& point_features, const RowMatrix& target_embeddings);

struct ConsistencyLoss {
  double value = 0.0;
  RowMatrix grad_a;
  RowMatrix grad_b;
};

// 1 - mean cosine over matched pairs. An empty match set gives 0 with zero
// gradients.
ConsistencyLoss consistency_loss(const RowMatrix& features_a, const RowMatrix& features_b,
                                 const MatchSet& matches);

inline double total_loss(double alignment, double consistency, double lambda) {
  return alignment + lambda * consistency;
}

// AdamW: bias-corrected moments plus decoupled weight decay.
void optimizer_step(EncoderParams& params, const EncoderParams& gradients, OptimizerState& state,
                    const TrainConfig& config);

// Consecutive partial clouds of one scene, ascending frame index.
struct TrainingSequence {
  SceneBounds bounds;
  std::vector<PartialCloud> clouds;
};

// A batch of partial clouds with their features; `adjacent` lists the
// (batch position i, i + 1) pairs that share a match set.
struct BatchView {
  std::vector<const PartialCloud*> clouds;
  std::vector<const RowMatrix*> features;
  std::vector<std::pair<std::size_t, const MatchSet*>> adjacent;  // (i, matches between i and i+1)
};

struct BatchObjective {
  double alignment = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  std::size_t labeled_points = 0;
  std::size_t matched_pairs = 0;
  std::vector<RowMatrix> grads;  // per cloud, w.r.t. its features
};

// Alignment pooled over every labeled point in the batch plus lambda times
// the consistency loss pooled over every matched pair.
BatchObjective pretrain_objective(const BatchView& batch, const TextEmbeddingTable& embeddings, double lambda);

struct PretrainOptions {
  MatchMode match_mode = MatchMode::kById;
  double match_radius = 0.02;
};

StageResult pretrain_stage(std::span<const TrainingSequence> sequences, const TextEmbeddingTable& embeddings,
                           const EncoderParams& params_init, const TrainConfig& config,
                           const PretrainOptions& options = {});

// Accepted (point, pseudo entity) pairs of one global scene.
struct FinetuneScene {
  RowMatrix inputs;                 // every scene point
  std::vector<std::uint32_t> rows;  // accepted point indices
  RowMatrix targets;                // one target embedding per accepted row
};

FinetuneScene make_finetune_scene(const GlobalScene& scene, const PseudoLabelSet& labels,
                                  std::span<const std::string> scene_vocabulary,
                                  const TextEmbeddingTable& embeddings);

// Alignment training over accepted pseudo labels. Starts from
// `pretrained` when config.load_pretrained, else from a fresh seeded init.
StageResult finetune_stage(std::span<const FinetuneScene> scenes, const EncoderParams& pretrained,
                           const TrainConfig& config);

// Mean cosine between encoder features of matched points in consecutive
// clouds; returns 0 with `pairs` = 0 when nothing matches.
struct MatchedCosine {
  double mean = 0.0;
  std::size_t pairs = 0;
};
MatchedCosine mean_matched_cosine(const EncoderParams& params, std::span<const TrainingSequence> sequences,
                                  const PretrainOptions& options = {});

}  // namespace pgov
