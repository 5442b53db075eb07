#include "pgov/embedding.hpp"

#include <cmath>
#include <random>

namespace pgov {

Eigen::VectorXd embed_entity(const std::string& entity, int dim, std::uint64_t seed) {
  if (dim < 2) throw Error(Errc::kInvalidArgument, "embedding dimension must be >= 2");
  std::mt19937_64 rng(splitmix64(stable_hash(entity) ^ seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v / std::max(v.norm(), kNormEpsilon);
}

TextEmbeddingTable::TextEmbeddingTable(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw Error(Errc::kInvalidArgument, "embedding dimension must be >= 2");
}

const Eigen::VectorXd& TextEmbeddingTable::add(const std::string& entity) {
  auto it = entries_.find(entity);
  if (it == entries_.end()) it = entries_.emplace(entity, embed_entity(entity, dim_, seed_)).first;
  return it->second;
}

const Eigen::VectorXd& TextEmbeddingTable::at(const std::string& entity) const {
  auto it = entries_.find(entity);
  if (it == entries_.end()) throw Error(Errc::kInvalidArgument, "no embedding for entity '" + entity + "'");
  return it->second;
}

RowMatrix TextEmbeddingTable::matrix(std::span<const std::string> entities) const {
  RowMatrix m(static_cast<Eigen::Index>(entities.size()), dim_);
  for (std::size_t i = 0; i < entities.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = at(entities[i]).transpose();
  return m;
}

TextEmbeddingTable embed_entities(std::span<const std::string> vocabulary, int dim, std::uint64_t seed) {
  TextEmbeddingTable table(dim, seed);
  for (const auto& e : vocabulary) table.add(e);
  return table;
}

EncoderParams EncoderParams::initialize(std::vector<int> layer_sizes, std::uint64_t seed) {
  EncoderParams p;
  p.layer_sizes = std::move(layer_sizes);
  p.seed = seed;
  if (p.layer_sizes.size() < 2) throw Error(Errc::kShapeMismatch, "encoder needs at least two layer sizes");
  std::mt19937_64 rng(mix_seed(seed, "encoder-init"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const int in = p.layer_sizes[l];
    const int out = p.layer_sizes[l + 1];
    if (in <= 0 || out <= 0) throw Error(Errc::kShapeMismatch, "layer sizes must be positive");
    DenseLayer layer;
    layer.weight.resize(out, in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = scale * gauss(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& other) {
  EncoderParams p;
  p.layer_sizes = other.layer_sizes;
  p.seed = other.seed;
  p.step = other.step;
  for (const auto& l : other.layers) {
    p.layers.push_back({RowMatrix::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  return p;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool EncoderParams::same_shape(const EncoderParams& other) const {
  if (layer_sizes != other.layer_sizes || layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight.rows() != other.layers[l].weight.rows() ||
        layers[l].weight.cols() != other.layers[l].weight.cols() ||
        layers[l].bias.size() != other.layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

void EncoderParams::validate() const {
  if (layer_sizes.size() < 2 || layers.size() + 1 != layer_sizes.size()) {
    throw Error(Errc::kShapeMismatch, "layer list does not match layer sizes");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() != layer_sizes[l + 1] || layer.weight.cols() != layer_sizes[l] ||
        layer.bias.size() != layer_sizes[l + 1]) {
      throw Error(Errc::kShapeMismatch, "layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(Errc::kInvalidArgument, "layer " + std::to_string(l) + " has non-finite values");
    }
  }
}

std::vector<double> EncoderParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

void EncoderParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(Errc::kShapeMismatch, "flat parameter length mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    std::copy_n(flat.data() + k, l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(flat.data() + k, l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

RowMatrix normalize_rows(const RowMatrix& m) {
  RowMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(i) / std::max(m.row(i).norm(), kNormEpsilon);
  return out;
}

RowMatrix encode_points(const EncoderParams& params, const RowMatrix& inputs, EncoderCache* cache) {
  if (params.layers.empty() || inputs.cols() != params.input_dim()) {
    throw Error(Errc::kShapeMismatch, "inputs have " + std::to_string(inputs.cols()) + " columns, encoder expects " +
                                          std::to_string(params.layers.empty() ? 0 : params.input_dim()));
  }
  if (!inputs.allFinite()) throw Error(Errc::kInvalidArgument, "encoder inputs must be finite");

  RowMatrix a = inputs;
  if (cache) {
    cache->input = inputs;
    cache->activations.clear();
  }
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    const auto& layer = params.layers[l];
    RowMatrix z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    a = z.array().tanh().matrix();
    if (cache) cache->activations.push_back(a);
  }
  RowMatrix raw = a * params.layers[last].weight.transpose();
  raw.rowwise() += params.layers[last].bias.transpose();

  Eigen::VectorXd norms = raw.rowwise().norm();
  RowMatrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = raw.row(i) / std::max(norms[i], kNormEpsilon);
  if (cache) {
    cache->raw_output = std::move(raw);
    cache->norms = std::move(norms);
    cache->output = out;
  }
  return out;
}

EncoderParams encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                               const RowMatrix& grad_features) {
  const std::size_t n_layers = params.layers.size();
  if (n_layers == 0 || cache.activations.size() + 1 != n_layers || cache.input.cols() != params.input_dim() ||
      cache.output.rows() != cache.input.rows() || cache.output.cols() != params.output_dim() ||
      grad_features.rows() != cache.output.rows() || grad_features.cols() != cache.output.cols()) {
    throw Error(Errc::kStaleCache, "cache or incoming gradient does not match the encoder shape");
  }
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    if (cache.activations[l].cols() != params.layer_sizes[l + 1]) {
      throw Error(Errc::kStaleCache, "cached activation " + std::to_string(l) + " has the wrong width");
    }
  }

  // d/dz of z / max(||z||, eps).
  RowMatrix dz(grad_features.rows(), grad_features.cols());
  for (Eigen::Index i = 0; i < dz.rows(); ++i) {
    const double norm = cache.norms[i];
    if (norm > kNormEpsilon) {
      const auto f = cache.output.row(i);
      dz.row(i) = (grad_features.row(i) - f * f.dot(grad_features.row(i))) / norm;
    } else {
      dz.row(i) = grad_features.row(i) / kNormEpsilon;
    }
  }

  EncoderParams grads = EncoderParams::zeros_like(params);
  for (std::size_t l = n_layers; l-- > 0;) {
    const RowMatrix& a_prev = l == 0 ? cache.input : cache.activations[l - 1];
    grads.layers[l].weight.noalias() = dz.transpose() * a_prev;
    grads.layers[l].bias = dz.colwise().sum().transpose();
    if (l == 0) break;
    RowMatrix da = dz * params.layers[l].weight;
    const RowMatrix& a = cache.activations[l - 1];
    dz = (da.array() * (1.0 - a.array().square())).matrix();
  }
  return grads;
}

RowMatrix make_encoder_inputs(std::span<const Vec3> positions, std::span<const Color> colors,
                              const SceneBounds& bounds) {
  if (positions.size() != colors.size()) throw Error(Errc::kShapeMismatch, "positions and colors differ in length");
  const Vec3 extent = (bounds.hi - bounds.lo).cwiseMax(1e-9);
  RowMatrix inputs(static_cast<Eigen::Index>(positions.size()), 6);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vec3 unit = 2.0 * (positions[i] - bounds.lo).cwiseQuotient(extent) - Vec3::Ones();
    inputs(r, 0) = unit.x();
    inputs(r, 1) = unit.y();
    inputs(r, 2) = unit.z();
    inputs(r, 3) = colors[i].x();
    inputs(r, 4) = colors[i].y();
    inputs(r, 5) = colors[i].z();
  }
  return inputs;
}

RowMatrix make_encoder_inputs(const GlobalScene& scene) {
  std::vector<Vec3> positions;
  std::vector<Color> colors;
  positions.reserve(scene.points.size());
  colors.reserve(scene.points.size());
  for (const auto& p : scene.points) {
    positions.push_back(p.position);
    colors.push_back(p.color.cast<float>());
  }
  return make_encoder_inputs(positions, colors, scene.bounds());
}

}  // namespace pgov
