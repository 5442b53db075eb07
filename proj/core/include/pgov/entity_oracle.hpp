#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "pgov/common.hpp"
#include "pgov/geometry.hpp"
#include "pgov/scene_synth.hpp"

namespace pgov {

// Knobs for the simulated 2D labeling pipeline. Applied in the order
// dropout -> mislabel -> erosion.
struct NoiseConfig {
  double category_dropout_prob = 0.0;
  double pixel_mislabel_prob = 0.0;
  int boundary_erosion_px = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-pixel entity ids into a frame-local vocabulary.
struct PixelEntityMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::string> vocabulary;

  static PixelEntityMap unlabeled(int width, int height);

  std::int32_t at(int u, int v) const { return ids[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
  std::int32_t& at(int u, int v) { return ids[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
  std::size_t labeled_count() const;
  // Throws VocabMismatch or InvalidArgument when an invariant is broken.
  void validate() const;
  bool operator==(const PixelEntityMap&) const = default;
};

// Maps scene point ids to ground-truth labels. Built once per scene.
class SceneLabelIndex {
 public:
  explicit SceneLabelIndex(const GlobalScene& scene);
  // Label of the point, or -1 if the id is not part of the scene.
  std::int32_t label_of(std::int64_t point_id) const;

 private:
  bool dense_ = false;
  std::vector<std::int32_t> dense_labels_;
  std::unordered_map<std::int64_t, std::int32_t> sparse_labels_;
};

PixelEntityMap oracle_pixel_entities(const Frame& frame, const GlobalScene& scene, const NoiseConfig& noise);
PixelEntityMap oracle_pixel_entities(const Frame& frame, const GlobalScene& scene,
                                     const SceneLabelIndex& index, const NoiseConfig& noise);

// Marks every labeled pixel UNLABELED when a valid pixel within Chebyshev
// distance `radius_px` carries a different id in `reference`. Pixels with
// valid[i] == false neither erode nor get eroded.
void erode_label_boundaries(PixelEntityMap& map, const std::vector<std::int32_t>& reference,
                            const std::vector<bool>& valid, int radius_px);

// Reads a signed 16-bit little-endian raster (-1 = unlabeled) and a JSON
// string array vocabulary.
PixelEntityMap ingest_external_masks(const std::filesystem::path& mask_path,
                                     const std::filesystem::path& vocab_path, int width, int height);

}  // namespace pgov
