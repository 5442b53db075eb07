#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgov/common.hpp"
#include "pgov/embedding.hpp"

namespace pgov {

// Prediction that could not be mapped onto an evaluation category.
inline constexpr std::int32_t kUnmatched = -2;

// Per point, the entity with the highest cosine to the point feature;
// lowest index on ties.
std::vector<std::int32_t> segment_scene(const RowMatrix& point_features, const RowMatrix& entity_embeddings);

// Rows are ground truth, columns prediction. Points whose prediction is
// kUnmatched (or the ignore id) land in `unmatched[gt]` and count as errors.
struct ConfusionMatrix {
  int k = 0;
  std::vector<std::uint64_t> counts;     // k * k, row-major
  std::vector<std::uint64_t> unmatched;  // per gt class

  explicit ConfusionMatrix(int classes = 0);
  std::uint64_t at(int gt, int pred) const { return counts[std::size_t(gt) * std::size_t(k) + std::size_t(pred)]; }
  std::uint64_t& at(int gt, int pred) { return counts[std::size_t(gt) * std::size_t(k) + std::size_t(pred)]; }
  std::uint64_t total() const;
  void merge(const ConfusionMatrix& other);
};

ConfusionMatrix build_confusion(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt, int k,
                                std::int32_t ignore_id);

struct SplitScores {
  double miou_base = 0.0;
  double miou_novel = 0.0;
  double hiou = 0.0;
};

struct EvalReport {
  std::vector<double> iou;        // per class; meaningful where included
  std::vector<double> accuracy;   // per class; meaningful where gt present
  std::vector<bool> included;     // class has gt or predictions
  double miou = 0.0;
  double macc = 0.0;
  std::uint64_t evaluated_points = 0;
  std::uint64_t unmatched_points = 0;
  std::optional<SplitScores> split;
};

// IoU_k = TP / (TP + FP + FN), Acc_k = TP / (TP + FN). Classes with neither
// ground truth nor predictions are left out of both means; mAcc averages
// over classes with ground truth.
EvalReport compute_metrics(const ConfusionMatrix& matrix);

double compute_hiou(double miou_base, double miou_novel);

// Fills report.split with base/novel mIoU (over included classes) and hIoU.
void attach_split(EvalReport& report, std::span<const int> base, std::span<const int> novel);

// alias -> evaluation category
using SynonymTable = std::map<std::string, std::string>;

// Maps each predicted entity string to an evaluation category index via
// exact match, then the alias table; kUnmatched otherwise.
std::vector<std::int32_t> remap_vocab(std::span<const std::string> predicted, std::span<const std::string> categories,
                                      const SynonymTable& synonyms);

}  // namespace pgov
