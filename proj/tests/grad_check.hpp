#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pgov/embedding.hpp"
#include "pgov/trainer.hpp"

namespace pgov::testing {

// Random clouds of encoder inputs with labels and adjacent match sets, for
// checking d(total)/d(params) through the whole chain.
struct GradInstance {
  EncoderParams params;
  std::vector<PartialCloud> clouds;
  std::vector<RowMatrix> inputs;
  std::vector<MatchSet> matches;  // matches[i] joins clouds i and i+1
  TextEmbeddingTable table{2, 0};
  double lambda = 0.2;
};

inline GradInstance make_grad_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 8), hidden(2, 16), npts(2, 30), nclouds(2, 3);
  std::normal_distribution<double> g(0.0, 1.0);
  GradInstance in;
  const int d = dim(rng);
  std::vector<int> sizes{6, hidden(rng)};
  if (rng() % 2) sizes.push_back(hidden(rng));
  sizes.push_back(d);
  in.params = EncoderParams::initialize(sizes, rng());
  for (auto& l : in.params.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.3 * g(rng);
  }
  const std::vector<std::string> vocab{"wall", "chair", "table", "door"};
  in.table = embed_entities(vocab, d, rng());
  in.lambda = std::uniform_real_distribution<double>(0.05, 1.0)(rng);

  const int n_clouds = nclouds(rng);
  for (int c = 0; c < n_clouds; ++c) {
    const int n = npts(rng);
    PartialCloud cloud;
    cloud.frame_index = c;
    cloud.vocabulary = vocab;
    RowMatrix x(n, 6);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 6; ++j) x(i, j) = g(rng);
      cloud.positions.emplace_back(x(i, 0), x(i, 1), x(i, 2));
      cloud.colors.emplace_back(0.f, 0.f, 0.f);
      cloud.source_ids.push_back(i);
      cloud.pixels.push_back({});
      cloud.entity_ids.push_back(static_cast<std::int32_t>(rng() % 5) - 1);
    }
    cloud.entity_ids[0] = 1;
    in.clouds.push_back(std::move(cloud));
    in.inputs.push_back(std::move(x));
  }
  for (int c = 0; c + 1 < n_clouds; ++c) {
    MatchSet m;
    const auto na = static_cast<std::uint32_t>(in.clouds[c].size());
    const auto nb = static_cast<std::uint32_t>(in.clouds[c + 1].size());
    for (std::uint32_t i = 0; i < std::min(na, nb); ++i) {
      if (i == 0 || rng() % 2) m.pairs.emplace_back(i, static_cast<std::uint32_t>((i * 7) % nb));
    }
    in.matches.push_back(std::move(m));
  }
  return in;
}

struct ChainEval {
  double total = 0.0;
  std::vector<double> grad;  // flattened, empty unless requested
};

inline ChainEval evaluate_chain(const GradInstance& in, const EncoderParams& params, bool with_grad) {
  const std::size_t n = in.clouds.size();
  std::vector<EncoderCache> caches(n);
  std::vector<RowMatrix> features(n);
  for (std::size_t c = 0; c < n; ++c) features[c] = encode_points(params, in.inputs[c], &caches[c]);
  BatchView view;
  for (std::size_t c = 0; c < n; ++c) {
    view.clouds.push_back(&in.clouds[c]);
    view.features.push_back(&features[c]);
    if (c + 1 < n) view.adjacent.emplace_back(c, &in.matches[c]);
  }
  const BatchObjective obj = pretrain_objective(view, in.table, in.lambda);
  ChainEval out;
  out.total = obj.total;
  if (with_grad) {
    std::vector<double> sum(params.parameter_count(), 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      const std::vector<double> part = encoder_backward(params, caches[c], obj.grads[c]).flatten();
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += part[k];
    }
    out.grad = std::move(sum);
  }
  return out;
}

// Max over parameters of |analytic - central difference| / max(|a|, |n|, floor).
inline double chain_gradient_error(const GradInstance& in, double step = 1e-5, double floor = 1e-7) {
  const std::vector<double> analytic = evaluate_chain(in, in.params, true).grad;
  std::vector<double> theta = in.params.flatten();
  EncoderParams q = in.params;
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + step;
    q.assign(theta);
    const double up = evaluate_chain(in, q, false).total;
    theta[k] = keep - step;
    q.assign(theta);
    const double down = evaluate_chain(in, q, false).total;
    theta[k] = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double err =
        std::abs(analytic[k] - numeric) / std::max({std::abs(analytic[k]), std::abs(numeric), floor});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace pgov::testing
