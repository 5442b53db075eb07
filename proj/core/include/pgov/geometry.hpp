#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgov/camera.hpp"
#include "pgov/common.hpp"
#include "pgov/scene_synth.hpp"

namespace pgov {

struct PixelEntityMap;

// One RGB-D observation. Depth 0 marks an invalid pixel. Depth and color are
// stored in single precision, matching the on-disk raster format.
struct Frame {
  int frame_index = 0;
  CameraIntrinsics intrinsics;
  CameraPose pose;
  Raster<float> depth;
  Raster<Color> color;
  Raster<std::int64_t> source_id;  // empty when provenance is unknown

  bool has_provenance() const { return source_id.size() == depth.size() && !depth.data.empty(); }
  std::size_t valid_pixel_count() const;
  void validate() const;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Points backprojected from one frame, stored as parallel arrays.
struct PartialCloud {
  int frame_index = 0;
  std::vector<Vec3> positions;
  std::vector<Color> colors;
  std::vector<std::int32_t> entity_ids;  // into `vocabulary`, or kUnlabeled
  std::vector<std::int64_t> source_ids;
  std::vector<PixelCoord> pixels;
  std::vector<std::string> vocabulary;   // the frame-local entity list

  std::size_t size() const { return positions.size(); }
  std::size_t labeled_count() const;
};

enum class MatchMode { kById, kByRadius };

struct MatchSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (index in A, index in B)
  MatchMode mode = MatchMode::kById;
  double radius = 0.0;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-frame z
};

// p = T * (d * K^-1 [u, v, 1]^T). Throws InvalidDepth for d <= 0 or non-finite.
Vec3 backproject_pixel(double u, double v, double depth_m, const CameraIntrinsics& intrinsics,
                       const CameraPose& pose);

// Inverse of backproject_pixel. Returns nullopt when the point is behind the
// camera (camera-frame z <= 0).
std::optional<PixelProjection> project_point(const Vec3& world_point, const CameraIntrinsics& intrinsics,
                                             const CameraPose& pose);

// Z-buffer point splatting. A point covers the integer pixels within
// Euclidean distance < point_radius_px of its rounded projection; the nearest
// camera depth wins, ties keep the lower point index.
Frame render_frame(const GlobalScene& scene, const CameraIntrinsics& intrinsics, const CameraPose& pose,
                   int point_radius_px = 1, int frame_index = 0);

// Per-frame photometric perturbation: a random per-channel gain and offset,
// a distance falloff and per-pixel gaussian noise. Models lighting that
// changes from view to view.
struct ColorNoise {
  double gain = 0.0;          // per-channel gain drawn from [1-gain, 1+gain]
  double offset = 0.0;        // per-channel offset drawn from [-offset, offset]
  double falloff = 0.0;       // brightness *= 1 / (1 + falloff * depth^2)
  double pixel_sigma = 0.0;   // per-pixel gaussian sigma
  bool enabled() const { return gain > 0 || offset > 0 || falloff > 0 || pixel_sigma > 0; }
};
void perturb_frame_colors(Frame& frame, const ColorNoise& noise, std::uint64_t seed);

// One point per valid-depth pixel, each inheriting the pixel's entity.
PartialCloud frame_to_partial_cloud(const Frame& frame, const PixelEntityMap& pixel_entities);

// by_id pairs each A point with the first B point that shares its source
// point id. by_radius pairs each A point with its nearest unused B point
// within radius_m (ties to the lower B index). Pairs are sorted by A index.
MatchSet match_points(const PartialCloud& cloud_a, const PartialCloud& cloud_b, MatchMode mode,
                      double radius_m = 0.0);

}  // namespace pgov
