#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pgov/camera.hpp"
#include "pgov/common.hpp"

namespace pgov {

enum class PrimitiveKind { kBox, kPlane };

// An axis-aligned surface primitive. A plane is the rectangle through
// `center` spanned by the two largest half-extents; its normal is the axis
// of the smallest half-extent.
struct ScenePrimitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  std::string category;
  Vec3 color = Vec3::Constant(0.5);
};

struct SceneSpec {
  Vec3 room_extent = Vec3(6.0, 5.0, 3.0);
  std::vector<ScenePrimitive> objects;
  double surface_density = 100.0;  // points per square meter
  double color_jitter = 0.0;       // per-point gaussian color sigma
  std::uint64_t seed = 0;

  void validate() const;
};

struct ScenePoint {
  std::int64_t id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  std::int32_t label = 0;  // index into GlobalScene::categories

  bool operator==(const ScenePoint& o) const {
    return id == o.id && position == o.position && color == o.color && label == o.label;
  }
};

struct SceneBounds {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
};

struct GlobalScene {
  std::vector<ScenePoint> points;
  std::vector<std::string> categories;

  SceneBounds bounds() const;
  Vec3 centroid() const;
  void validate() const;
  bool operator==(const GlobalScene&) const = default;
};

struct CameraTrajectory {
  std::vector<CameraPose> poses;
  int frame_stride = 1;
};

struct TrajectoryOptions {
  double eye_height_min = 1.3;
  double eye_height_max = 1.7;
  double radius_fraction = 0.3;   // of the smaller horizontal room extent
  double target_height = 0.8;
  double angle_jitter = 0.05;     // radians
  double radius_jitter = 0.1;     // meters
};

GlobalScene generate_scene(const SceneSpec& spec);

CameraTrajectory generate_trajectory(const GlobalScene& scene, int n_frames, std::uint64_t seed,
                                     const TrajectoryOptions& options = {});

// Named splits take the first `base` categories as base and the next
// `novel` ones as novel.
struct CategorySplit {
  std::vector<int> base;
  std::vector<int> novel;
};
CategorySplit split_base_novel(const std::vector<std::string>& categories,
                               const std::string& split_name);
CategorySplit split_base_novel(const std::vector<std::string>& categories,
                               std::vector<int> base, std::vector<int> novel);

// Randomized furnished room used by the benchmark pipeline.
struct RoomLayoutOptions {
  double surface_density = 250.0;
  double color_jitter = 0.02;
  double object_color_spread = 0.05;
};
SceneSpec make_room_spec(std::uint64_t seed, const RoomLayoutOptions& options = {});

// Category names produced by make_room_spec, in canonical order.
const std::vector<std::string>& room_categories();

}  // namespace pgov
