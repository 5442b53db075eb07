#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pgov/common.hpp"
#include "pgov/scene_synth.hpp"

namespace pgov {

inline constexpr double kNormEpsilon = 1e-12;

// Deterministic stand-in for a text encoder: each entity string maps to a
// unit vector drawn from a gaussian stream seeded by hash(string) ^ seed.
class TextEmbeddingTable {
 public:
  TextEmbeddingTable(int dim, std::uint64_t seed);

  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Adds (if missing) and returns the embedding of `entity`.
  const Eigen::VectorXd& add(const std::string& entity);
  const Eigen::VectorXd& at(const std::string& entity) const;
  bool contains(const std::string& entity) const { return entries_.count(entity) != 0; }
  std::size_t size() const { return entries_.size(); }

  // Rows are the embeddings of `entities`, in order.
  RowMatrix matrix(std::span<const std::string> entities) const;

 private:
  int dim_;
  std::uint64_t seed_;
  std::map<std::string, Eigen::VectorXd> entries_;
};

Eigen::VectorXd embed_entity(const std::string& entity, int dim, std::uint64_t seed);
TextEmbeddingTable embed_entities(std::span<const std::string> vocabulary, int dim, std::uint64_t seed);

struct DenseLayer {
  RowMatrix weight;        // out x in
  Eigen::VectorXd bias;    // out
};

// MLP [6, hidden..., D]: tanh on hidden layers, linear output, rows
// L2-normalized. Also used as the gradient container for itself.
struct EncoderParams {
  std::vector<int> layer_sizes;
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  // Gaussian weights with std 1/sqrt(fan_in), zero biases.
  static EncoderParams initialize(std::vector<int> layer_sizes, std::uint64_t seed);
  static EncoderParams zeros_like(const EncoderParams& other);

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
  bool same_shape(const EncoderParams& other) const;
  void validate() const;

  // Flat view in checkpoint order: per layer, weights row-major then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct EncoderCache {
  RowMatrix input;                      // N x in
  std::vector<RowMatrix> activations;   // tanh outputs of hidden layers
  RowMatrix raw_output;                 // N x D before normalization
  Eigen::VectorXd norms;                // ||raw_output row||
  RowMatrix output;                     // normalized
};

RowMatrix encode_points(const EncoderParams& params, const RowMatrix& inputs, EncoderCache* cache = nullptr);

// Reverse-mode gradient of <grad_features, features(params)> w.r.t. params.
EncoderParams encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                               const RowMatrix& grad_features);

// Maps xyz into [-1, 1] by the scene bounds and appends rgb.
RowMatrix make_encoder_inputs(std::span<const Vec3> positions, std::span<const Color> colors,
                              const SceneBounds& bounds);
RowMatrix make_encoder_inputs(const GlobalScene& scene);

// Row-wise v / max(||v||, eps).
RowMatrix normalize_rows(const RowMatrix& m);

}  // namespace pgov
