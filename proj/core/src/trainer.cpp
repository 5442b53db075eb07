#include "pgov/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace pgov {

void TrainConfig::validate() const {
  if (!(lambda_consistency >= 0.0)) throw Error(Errc::kInvalidArgument, "lambda_consistency must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(Errc::kInvalidArgument, "learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw Error(Errc::kInvalidArgument, "weight_decay must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(Errc::kInvalidArgument, "adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error(Errc::kInvalidArgument, "adam_eps must be > 0");
  if (batch_size_stage1 < 1 || batch_size_stage2 < 1) throw Error(Errc::kInvalidArgument, "batch sizes must be >= 1");
  if (epochs_stage1 < 0 || epochs_stage2 < 0) throw Error(Errc::kInvalidArgument, "epochs must be >= 0");
}

OptimizerState OptimizerState::for_params(const EncoderParams& params) {
  OptimizerState s;
  s.first_moment.assign(params.parameter_count(), 0.0);
  s.second_moment.assign(params.parameter_count(), 0.0);
  return s;
}

std::vector<double> epoch_mean_totals(std::span<const LossRecord> log) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& r : log) {
    auto& [sum, n] = acc[r.epoch];
    sum += r.total;
    ++n;
  }
  std::vector<double> means;
  for (const auto& [epoch, sn] : acc) means.push_back(sn.first / sn.second);
  return means;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, "cosine of vectors with different sizes");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(Errc::kZeroVector, "cosine similarity of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace {

// Adds scale * d cos(x, y) / dx to gx and returns cos(x, y).
template <class RowX, class RowY, class RowG>
double cosine_with_grad(const RowX& x, const RowY& y, double scale, RowG&& gx) {
  const double nx = std::max(x.norm(), kNormEpsilon);
  const double ny = std::max(y.norm(), kNormEpsilon);
  const double c = x.dot(y) / (nx * ny);
  gx += scale * (y / (nx * ny) - c * x / (nx * nx));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

LossAndGrad alignment_loss(const RowMatrix& point_features, const RowMatrix& target_embeddings) {
  if (point_features.rows() == 0) throw Error(Errc::kEmptyBatch, "alignment loss over zero points");
  if (point_features.rows() != target_embeddings.rows() || point_features.cols() != target_embeddings.cols()) {
    throw Error(Errc::kShapeMismatch, "features and targets differ in shape");
  }
  const Eigen::Index n = point_features.rows();
  LossAndGrad out;
  out.grad = RowMatrix::Zero(n, point_features.cols());
  const double scale = -1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += 1.0 - cosine_with_grad(point_features.row(i), target_embeddings.row(i), scale, out.grad.row(i));
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

ConsistencyLoss consistency_loss(const RowMatrix& features_a, const RowMatrix& features_b, const MatchSet& matches) {
  ConsistencyLoss out;
  out.grad_a = RowMatrix::Zero(features_a.rows(), features_a.cols());
  out.grad_b = RowMatrix::Zero(features_b.rows(), features_b.cols());
  if (matches.empty()) return out;
  if (features_a.cols() != features_b.cols()) throw Error(Errc::kShapeMismatch, "feature widths differ");
  const double scale = -1.0 / static_cast<double>(matches.size());
  double sum = 0.0;
  for (const auto& [ia, ib] : matches.pairs) {
    if (ia >= features_a.rows() || ib >= features_b.rows()) {
      throw Error(Errc::kInvalidArgument, "match index out of range");
    }
    sum += cosine_with_grad(features_a.row(ia), features_b.row(ib), scale, out.grad_a.row(ia));
    cosine_with_grad(features_b.row(ib), features_a.row(ia), scale, out.grad_b.row(ib));
  }
  out.value = 1.0 - sum / static_cast<double>(matches.size());
  return out;
}

void optimizer_step(EncoderParams& params, const EncoderParams& gradients, OptimizerState& state,
                    const TrainConfig& config) {
  if (!params.same_shape(gradients)) throw Error(Errc::kShapeMismatch, "gradient shape does not match params");
  const std::size_t n = params.parameter_count();
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw Error(Errc::kShapeMismatch, "optimizer state does not match params");
  }
  std::vector<double> theta = params.flatten();
  const std::vector<double> g = gradients.flatten();
  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * g[i];
    v = b2 * v + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    theta[i] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.adam_eps) + config.weight_decay * theta[i]);
  }
  params.assign(theta);
  params.step = state.step;
}

BatchObjective pretrain_objective(const BatchView& batch, const TextEmbeddingTable& embeddings, double lambda) {
  const std::size_t n = batch.clouds.size();
  if (batch.features.size() != n) throw Error(Errc::kShapeMismatch, "one feature matrix per cloud is required");
  BatchObjective obj;
  obj.grads.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& f = *batch.features[c];
    if (static_cast<std::size_t>(f.rows()) != batch.clouds[c]->size()) {
      throw Error(Errc::kShapeMismatch, "feature rows do not match cloud size");
    }
    obj.grads.push_back(RowMatrix::Zero(f.rows(), f.cols()));
    obj.labeled_points += batch.clouds[c]->labeled_count();
  }

  if (obj.labeled_points > 0) {
    const double scale = -1.0 / static_cast<double>(obj.labeled_points);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const PartialCloud& cloud = *batch.clouds[c];
      const RowMatrix& f = *batch.features[c];
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const std::int32_t e = cloud.entity_ids[i];
        if (e == kUnlabeled) continue;
        const Eigen::VectorXd& t = embeddings.at(cloud.vocabulary[static_cast<std::size_t>(e)]);
        const auto r = static_cast<Eigen::Index>(i);
        sum += 1.0 - cosine_with_grad(f.row(r), t.transpose(), scale, obj.grads[c].row(r));
      }
    }
    obj.alignment = sum / static_cast<double>(obj.labeled_points);
  }

  for (const auto& [i, m] : batch.adjacent) obj.matched_pairs += m->size();
  if (obj.matched_pairs > 0) {
    // Gradients carry the lambda weight; with lambda = 0 only the value is tracked.
    const double scale = -lambda / static_cast<double>(obj.matched_pairs);
    double sum = 0.0;
    for (const auto& [i, m] : batch.adjacent) {
      const RowMatrix& fa = *batch.features[i];
      const RowMatrix& fb = *batch.features[i + 1];
      for (const auto& [ia, ib] : m->pairs) {
        sum += cosine_with_grad(fa.row(ia), fb.row(ib), scale, obj.grads[i].row(ia));
        cosine_with_grad(fb.row(ib), fa.row(ia), scale, obj.grads[i + 1].row(ib));
      }
    }
    obj.consistency = 1.0 - sum / static_cast<double>(obj.matched_pairs);
  }
  obj.total = total_loss(obj.alignment, obj.consistency, lambda);
  return obj;
}

namespace {

struct PreparedCloud {
  const PartialCloud* cloud = nullptr;
  RowMatrix inputs;
};

struct Window {
  std::size_t sequence = 0;
  std::size_t begin = 0;
  std::size_t size = 0;
};

EncoderParams sum_gradients(const EncoderParams& like, std::vector<EncoderParams>& parts) {
  EncoderParams total = EncoderParams::zeros_like(like);
  for (const auto& p : parts) {
    for (std::size_t l = 0; l < total.layers.size(); ++l) {
      total.layers[l].weight += p.layers[l].weight;
      total.layers[l].bias += p.layers[l].bias;
    }
  }
  return total;
}

template <class T>
void shuffle_in_place(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::vector<MatchSet>> mine_adjacent_matches(std::span<const TrainingSequence> sequences,
                                                         const PretrainOptions& options) {
  std::vector<std::vector<MatchSet>> matches(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& clouds = sequences[s].clouds;
    matches[s].resize(clouds.empty() ? 0 : clouds.size() - 1);
    parallel_for(matches[s].size(), [&](std::size_t k) {
      if (clouds[k + 1].frame_index != clouds[k].frame_index + 1) {
        matches[s][k] = MatchSet{};
        return;
      }
      matches[s][k] = match_points(clouds[k], clouds[k + 1], options.match_mode, options.match_radius);
    });
  }
  return matches;
}

}  // namespace

StageResult pretrain_stage(std::span<const TrainingSequence> sequences, const TextEmbeddingTable& embeddings,
                           const EncoderParams& params_init, const TrainConfig& config,
                           const PretrainOptions& options) {
  config.validate();
  params_init.validate();
  std::size_t labeled = 0;
  for (const auto& seq : sequences) {
    for (const auto& c : seq.clouds) labeled += c.labeled_count();
  }
  if (labeled == 0) throw Error(Errc::kNoLabels, "every point of every partial cloud is unlabeled");

  std::vector<std::vector<PreparedCloud>> prepared(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    prepared[s].resize(sequences[s].clouds.size());
    parallel_for(prepared[s].size(), [&](std::size_t k) {
      const auto& cloud = sequences[s].clouds[k];
      prepared[s][k].cloud = &cloud;
      prepared[s][k].inputs = make_encoder_inputs(cloud.positions, cloud.colors, sequences[s].bounds);
    });
  }
  const auto matches = mine_adjacent_matches(sequences, options);

  std::vector<Window> windows;
  const auto bs = static_cast<std::size_t>(config.batch_size_stage1);
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (std::size_t b = 0; b < sequences[s].clouds.size(); b += bs) {
      windows.push_back({s, b, std::min(bs, sequences[s].clouds.size() - b)});
    }
  }

  StageResult result;
  result.params = params_init;
  result.optimizer = OptimizerState::for_params(params_init);
  int step = 0;
  for (int epoch = 0; epoch < config.epochs_stage1; ++epoch) {
    std::vector<Window> order = windows;
    shuffle_in_place(order, mix_seed(config.seed, mix_seed(static_cast<std::uint64_t>(epoch), "stage1-epoch")));
    for (const Window& w : order) {
      std::vector<EncoderCache> caches(w.size);
      std::vector<RowMatrix> features(w.size);
      parallel_for(w.size, [&](std::size_t k) {
        features[k] = encode_points(result.params, prepared[w.sequence][w.begin + k].inputs, &caches[k]);
      });
      BatchView view;
      for (std::size_t k = 0; k < w.size; ++k) {
        view.clouds.push_back(prepared[w.sequence][w.begin + k].cloud);
        view.features.push_back(&features[k]);
        if (k + 1 < w.size) view.adjacent.emplace_back(k, &matches[w.sequence][w.begin + k]);
      }
      const BatchObjective obj = pretrain_objective(view, embeddings, config.lambda_consistency);
      std::vector<EncoderParams> parts(w.size);
      parallel_for(w.size, [&](std::size_t k) { parts[k] = encoder_backward(result.params, caches[k], obj.grads[k]); });
      const EncoderParams grads = sum_gradients(result.params, parts);
      optimizer_step(result.params, grads, result.optimizer, config);
      result.log.push_back({epoch, step++, obj.alignment, obj.consistency, obj.total});
    }
  }
  return result;
}

FinetuneScene make_finetune_scene(const GlobalScene& scene, const PseudoLabelSet& labels,
                                  std::span<const std::string> scene_vocabulary,
                                  const TextEmbeddingTable& embeddings) {
  if (labels.size() != scene.points.size()) {
    throw Error(Errc::kShapeMismatch, "pseudo label count does not match scene point count");
  }
  FinetuneScene fs;
  fs.inputs = make_encoder_inputs(scene);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.accepted[i]) fs.rows.push_back(static_cast<std::uint32_t>(i));
  }
  fs.targets.resize(static_cast<Eigen::Index>(fs.rows.size()), embeddings.dim());
  for (std::size_t k = 0; k < fs.rows.size(); ++k) {
    const auto e = static_cast<std::size_t>(labels.entity[fs.rows[k]]);
    if (e >= scene_vocabulary.size()) throw Error(Errc::kVocabMismatch, "pseudo label outside scene vocabulary");
    fs.targets.row(static_cast<Eigen::Index>(k)) = embeddings.at(scene_vocabulary[e]).transpose();
  }
  return fs;
}

StageResult finetune_stage(std::span<const FinetuneScene> scenes, const EncoderParams& pretrained,
                           const TrainConfig& config) {
  config.validate();
  std::size_t accepted = 0;
  for (const auto& s : scenes) accepted += s.rows.size();
  if (accepted == 0) throw Error(Errc::kNoAcceptedLabels, "no accepted pseudo labels to fine-tune on");

  StageResult result;
  result.params = config.load_pretrained
                      ? pretrained
                      : EncoderParams::initialize(pretrained.layer_sizes, mix_seed(config.seed, "stage2-init"));
  if (!config.load_pretrained) result.params.step = 0;
  result.params.validate();
  result.optimizer = OptimizerState::for_params(result.params);

  std::vector<std::size_t> usable;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (!scenes[s].rows.empty()) usable.push_back(s);
  }
  const auto bs = static_cast<std::size_t>(config.batch_size_stage2);
  int step = 0;
  for (int epoch = 0; epoch < config.epochs_stage2; ++epoch) {
    std::vector<std::size_t> order = usable;
    shuffle_in_place(order, mix_seed(config.seed, mix_seed(static_cast<std::uint64_t>(epoch), "stage2-epoch")));
    for (std::size_t b = 0; b < order.size(); b += bs) {
      const std::size_t count = std::min(bs, order.size() - b);
      std::size_t batch_rows = 0;
      for (std::size_t k = 0; k < count; ++k) batch_rows += scenes[order[b + k]].rows.size();

      std::vector<EncoderParams> parts(count);
      std::vector<double> sums(count, 0.0);
      parallel_for(count, [&](std::size_t k) {
        const FinetuneScene& s = scenes[order[b + k]];
        RowMatrix inputs(static_cast<Eigen::Index>(s.rows.size()), s.inputs.cols());
        for (std::size_t r = 0; r < s.rows.size(); ++r) inputs.row(static_cast<Eigen::Index>(r)) = s.inputs.row(s.rows[r]);
        EncoderCache cache;
        const RowMatrix f = encode_points(result.params, inputs, &cache);
        LossAndGrad lg = alignment_loss(f, s.targets);
        // Rescale the per-scene mean to a mean over every accepted point in the batch.
        const double w = static_cast<double>(s.rows.size()) / static_cast<double>(batch_rows);
        sums[k] = lg.value * w;
        lg.grad *= w;
        parts[k] = encoder_backward(result.params, cache, lg.grad);
      });
      double alignment = 0.0;
      for (double v : sums) alignment += v;
      const EncoderParams grads = sum_gradients(result.params, parts);
      optimizer_step(result.params, grads, result.optimizer, config);
      result.log.push_back({epoch, step++, alignment, 0.0, alignment});
    }
  }
  return result;
}

MatchedCosine mean_matched_cosine(const EncoderParams& params, std::span<const TrainingSequence> sequences,
                                  const PretrainOptions& options) {
  const auto matches = mine_adjacent_matches(sequences, options);
  MatchedCosine out;
  double sum = 0.0;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& clouds = sequences[s].clouds;
    std::vector<RowMatrix> features(clouds.size());
    parallel_for(clouds.size(), [&](std::size_t k) {
      features[k] = encode_points(params, make_encoder_inputs(clouds[k].positions, clouds[k].colors, sequences[s].bounds));
    });
    for (std::size_t k = 0; k < matches[s].size(); ++k) {
      for (const auto& [ia, ib] : matches[s][k].pairs) {
        sum += features[k].row(ia).dot(features[k + 1].row(ib));
        ++out.pairs;
      }
    }
  }
  if (out.pairs > 0) out.mean = sum / static_cast<double>(out.pairs);
  return out;
}

}  // namespace pgov
