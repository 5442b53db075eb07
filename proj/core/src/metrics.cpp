#include "pgov/metrics.hpp"

#include <algorithm>

namespace pgov {

std::vector<std::int32_t> segment_scene(const RowMatrix& point_features, const RowMatrix& entity_embeddings) {
  if (entity_embeddings.rows() == 0) throw Error(Errc::kEmptyVocabulary, "evaluation vocabulary is empty");
  if (point_features.cols() != entity_embeddings.cols()) {
    throw Error(Errc::kShapeMismatch, "feature and embedding widths differ");
  }
  const RowMatrix dots = point_features * entity_embeddings.transpose();
  const Eigen::VectorXd tn = entity_embeddings.rowwise().norm().cwiseMax(kNormEpsilon);
  std::vector<std::int32_t> pred(static_cast<std::size_t>(point_features.rows()));
  for (Eigen::Index i = 0; i < dots.rows(); ++i) {
    // The point norm is a common positive factor; dividing by it cannot change the argmax.
    Eigen::Index best = 0;
    double best_score = dots(i, 0) / tn[0];
    for (Eigen::Index j = 1; j < dots.cols(); ++j) {
      const double score = dots(i, j) / tn[j];
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    pred[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
  }
  return pred;
}

ConfusionMatrix::ConfusionMatrix(int classes)
    : k(classes), counts(std::size_t(classes) * std::size_t(classes), 0), unmatched(std::size_t(classes), 0) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  for (auto c : unmatched) t += c;
  return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k != k) throw Error(Errc::kShapeMismatch, "cannot merge confusion matrices of different size");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  for (std::size_t i = 0; i < unmatched.size(); ++i) unmatched[i] += other.unmatched[i];
}

ConfusionMatrix build_confusion(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt, int k,
                                std::int32_t ignore_id) {
  if (pred.size() != gt.size()) throw Error(Errc::kShapeMismatch, "prediction and ground truth lengths differ");
  if (k <= 0) throw Error(Errc::kInvalidArgument, "class count must be positive");
  ConfusionMatrix m(k);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::int32_t g = gt[i];
    const std::int32_t p = pred[i];
    if (g == ignore_id) {
      if (p != ignore_id && p != kUnmatched && (p < 0 || p >= k)) {
        throw Error(Errc::kOutOfRangeLabel, "prediction " + std::to_string(p) + " at point " + std::to_string(i));
      }
      continue;
    }
    if (g < 0 || g >= k) {
      throw Error(Errc::kOutOfRangeLabel, "ground truth " + std::to_string(g) + " at point " + std::to_string(i));
    }
    if (p == kUnmatched || p == ignore_id) {
      ++m.unmatched[static_cast<std::size_t>(g)];
    } else if (p < 0 || p >= k) {
      throw Error(Errc::kOutOfRangeLabel, "prediction " + std::to_string(p) + " at point " + std::to_string(i));
    } else {
      ++m.at(g, p);
    }
  }
  return m;
}

EvalReport compute_metrics(const ConfusionMatrix& matrix) {
  const int k = matrix.k;
  EvalReport r;
  r.evaluated_points = matrix.total();
  if (r.evaluated_points == 0) throw Error(Errc::kEmptyMatrix, "no evaluated points");
  r.iou.assign(static_cast<std::size_t>(k), 0.0);
  r.accuracy.assign(static_cast<std::size_t>(k), 0.0);
  r.included.assign(static_cast<std::size_t>(k), false);
  double iou_sum = 0.0;
  double acc_sum = 0.0;
  int iou_n = 0;
  int acc_n = 0;
  for (int c = 0; c < k; ++c) {
    const std::uint64_t tp = matrix.at(c, c);
    std::uint64_t gt_total = matrix.unmatched[static_cast<std::size_t>(c)];
    std::uint64_t pred_total = 0;
    for (int j = 0; j < k; ++j) {
      gt_total += matrix.at(c, j);
      pred_total += matrix.at(j, c);
    }
    r.unmatched_points += matrix.unmatched[static_cast<std::size_t>(c)];
    if (gt_total == 0 && pred_total == 0) continue;
    const std::uint64_t fn = gt_total - tp;
    const std::uint64_t fp = pred_total - tp;
    const auto ci = static_cast<std::size_t>(c);
    r.included[ci] = true;
    r.iou[ci] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    iou_sum += r.iou[ci];
    ++iou_n;
    if (gt_total > 0) {
      r.accuracy[ci] = static_cast<double>(tp) / static_cast<double>(gt_total);
      acc_sum += r.accuracy[ci];
      ++acc_n;
    }
  }
  r.miou = iou_n ? iou_sum / iou_n : 0.0;
  r.macc = acc_n ? acc_sum / acc_n : 0.0;
  return r;
}

double compute_hiou(double miou_base, double miou_novel) {
  const double s = miou_base + miou_novel;
  if (s == 0.0) return 0.0;
  return 2.0 * miou_base * miou_novel / s;
}

void attach_split(EvalReport& report, std::span<const int> base, std::span<const int> novel) {
  auto mean_over = [&report](std::span<const int> classes) {
    double sum = 0.0;
    int n = 0;
    for (int c : classes) {
      if (c < 0 || c >= static_cast<int>(report.iou.size())) throw Error(Errc::kBadSplit, "split class out of range");
      if (!report.included[static_cast<std::size_t>(c)]) continue;
      sum += report.iou[static_cast<std::size_t>(c)];
      ++n;
    }
    return n ? sum / n : 0.0;
  };
  SplitScores s;
  s.miou_base = mean_over(base);
  s.miou_novel = mean_over(novel);
  s.hiou = compute_hiou(s.miou_base, s.miou_novel);
  report.split = s;
}

std::vector<std::int32_t> remap_vocab(std::span<const std::string> predicted, std::span<const std::string> categories,
                                      const SynonymTable& synonyms) {
  std::map<std::string, std::int32_t> index;
  for (std::size_t i = 0; i < categories.size(); ++i) index.emplace(categories[i], static_cast<std::int32_t>(i));
  std::vector<std::int32_t> out;
  out.reserve(predicted.size());
  for (const auto& p : predicted) {
    auto it = index.find(p);
    if (it == index.end()) {
      auto alias = synonyms.find(p);
      if (alias != synonyms.end()) it = index.find(alias->second);
    }
    out.push_back(it == index.end() ? kUnmatched : it->second);
  }
  return out;
}

}  // namespace pgov
