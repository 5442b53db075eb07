#include "pgov/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "pgov/entity_oracle.hpp"

namespace pgov {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::kInvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(Errc::kInvalidArgument, "principal point outside the image");
  }
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(world_up);
  if (right.norm() < 1e-12) right = forward.cross(Vec3::UnitX());
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  return pose;
}

Eigen::Matrix4d CameraPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

CameraPose CameraPose::from_matrix(const Eigen::Matrix4d& m) {
  CameraPose pose;
  pose.rotation = m.topLeftCorner<3, 3>();
  pose.translation = m.topRightCorner<3, 1>();
  return pose;
}

void CameraPose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(Errc::kInvalidArgument, "pose contains non-finite values");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) throw Error(Errc::kInvalidArgument, "rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument, "rotation determinant is not +1");
  }
}

std::size_t Frame::valid_pixel_count() const {
  return static_cast<std::size_t>(
      std::count_if(depth.data.begin(), depth.data.end(), [](float d) { return d > 0.0f; }));
}

void Frame::validate() const {
  intrinsics.validate();
  pose.validate();
  if (depth.width != intrinsics.width || depth.height != intrinsics.height) {
    throw Error(Errc::kDimMismatch, "depth raster does not match intrinsics");
  }
  if (color.width != depth.width || color.height != depth.height) {
    throw Error(Errc::kDimMismatch, "color raster does not match depth raster");
  }
  if (!source_id.data.empty() && (source_id.width != depth.width || source_id.height != depth.height)) {
    throw Error(Errc::kDimMismatch, "source id raster does not match depth raster");
  }
  for (float d : depth.data) {
    if (!(d >= 0.0f) || !std::isfinite(d)) throw Error(Errc::kInvalidDepth, "depth must be finite and >= 0");
  }
}

std::size_t PartialCloud::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(entity_ids.begin(), entity_ids.end(), [](std::int32_t e) { return e != kUnlabeled; }));
}

Vec3 backproject_pixel(double u, double v, double depth_m, const CameraIntrinsics& intrinsics,
                       const CameraPose& pose) {
  if (!(depth_m > 0.0) || !std::isfinite(depth_m)) {
    throw Error(Errc::kInvalidDepth, "depth must be positive and finite");
  }
  const Vec3 camera_point((u - intrinsics.cx) / intrinsics.fx * depth_m,
                          (v - intrinsics.cy) / intrinsics.fy * depth_m, depth_m);
  return pose.to_world(camera_point);
}

std::optional<PixelProjection> project_point(const Vec3& world_point, const CameraIntrinsics& intrinsics,
                                             const CameraPose& pose) {
  const Vec3 c = pose.to_camera(world_point);
  if (!(c.z() > 0.0)) return std::nullopt;
  return PixelProjection{intrinsics.fx * c.x() / c.z() + intrinsics.cx,
                         intrinsics.fy * c.y() / c.z() + intrinsics.cy, c.z()};
}

Frame render_frame(const GlobalScene& scene, const CameraIntrinsics& intrinsics, const CameraPose& pose,
                   int point_radius_px, int frame_index) {
  intrinsics.validate();
  if (point_radius_px < 1) throw Error(Errc::kInvalidArgument, "point_radius_px must be >= 1");
  Frame frame;
  frame.frame_index = frame_index;
  frame.intrinsics = intrinsics;
  frame.pose = pose;
  frame.depth = Raster<float>(intrinsics.width, intrinsics.height, 0.0f);
  frame.color = Raster<Color>(intrinsics.width, intrinsics.height, Color::Zero());
  frame.source_id = Raster<std::int64_t>(intrinsics.width, intrinsics.height, kNoSource);

  // Z-buffer kept in double so ties and ordering do not depend on rounding.
  Raster<double> zbuf(intrinsics.width, intrinsics.height, std::numeric_limits<double>::infinity());
  const int r = point_radius_px;
  const double r2 = double(r) * double(r);

  for (const auto& p : scene.points) {
    const auto proj = project_point(p.position, intrinsics, pose);
    if (!proj) continue;
    const long cu = std::lround(proj->u);
    const long cv = std::lround(proj->v);
    if (cu + r <= 0 || cv + r <= 0 || cu - r >= intrinsics.width || cv - r >= intrinsics.height) continue;
    for (int dv = -(r - 1); dv <= r - 1; ++dv) {
      for (int du = -(r - 1); du <= r - 1; ++du) {
        if (double(du) * du + double(dv) * dv >= r2) continue;
        const int u = static_cast<int>(cu) + du;
        const int v = static_cast<int>(cv) + dv;
        if (!zbuf.contains(u, v) || !(proj->depth < zbuf.at(u, v))) continue;
        zbuf.at(u, v) = proj->depth;
        frame.depth.at(u, v) = static_cast<float>(proj->depth);
        frame.color.at(u, v) = p.color.cast<float>();
        frame.source_id.at(u, v) = p.id;
      }
    }
  }
  return frame;
}

void perturb_frame_colors(Frame& frame, const ColorNoise& noise, std::uint64_t seed) {
  if (!noise.enabled()) return;
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(frame.frame_index)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Array3d gain, offset;
  for (int c = 0; c < 3; ++c) gain[c] = 1.0 + noise.gain * unit(rng);
  for (int c = 0; c < 3; ++c) offset[c] = noise.offset * unit(rng);
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    const double d = frame.depth.data[i];
    if (!(d > 0.0)) continue;
    const double shade = 1.0 / (1.0 + noise.falloff * d * d);
    Eigen::Array3d c = frame.color.data[i].cast<double>().array() * gain * shade + offset;
    if (noise.pixel_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) c[k] += noise.pixel_sigma * gauss(rng);
    }
    frame.color.data[i] = c.max(0.0).min(1.0).matrix().cast<float>();
  }
}

PartialCloud frame_to_partial_cloud(const Frame& frame, const PixelEntityMap& pixel_entities) {
  if (pixel_entities.width != frame.depth.width || pixel_entities.height != frame.depth.height) {
    throw Error(Errc::kDimMismatch, "entity map is " + std::to_string(pixel_entities.width) + "x" +
                                        std::to_string(pixel_entities.height) + ", frame is " +
                                        std::to_string(frame.depth.width) + "x" +
                                        std::to_string(frame.depth.height));
  }
  PartialCloud cloud;
  cloud.frame_index = frame.frame_index;
  cloud.vocabulary = pixel_entities.vocabulary;
  const std::size_t n = frame.valid_pixel_count();
  cloud.positions.reserve(n);
  cloud.colors.reserve(n);
  cloud.entity_ids.reserve(n);
  cloud.source_ids.reserve(n);
  cloud.pixels.reserve(n);
  const bool provenance = frame.has_provenance();
  for (int v = 0; v < frame.depth.height; ++v) {
    for (int u = 0; u < frame.depth.width; ++u) {
      const float d = frame.depth.at(u, v);
      if (!(d > 0.0f)) continue;
      cloud.positions.push_back(backproject_pixel(u, v, d, frame.intrinsics, frame.pose));
      cloud.colors.push_back(frame.color.at(u, v));
      cloud.entity_ids.push_back(pixel_entities.at(u, v));
      cloud.source_ids.push_back(provenance ? frame.source_id.at(u, v) : kNoSource);
      cloud.pixels.push_back({u, v});
    }
  }
  return cloud;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.x));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k.y));
    return static_cast<std::size_t>(splitmix64(h ^ static_cast<std::uint64_t>(k.z)));
  }
};

VoxelKey voxel_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

}  // namespace

MatchSet match_points(const PartialCloud& cloud_a, const PartialCloud& cloud_b, MatchMode mode,
                      double radius_m) {
  MatchSet matches;
  matches.mode = mode;
  if (mode == MatchMode::kById) {
    std::unordered_map<std::int64_t, std::uint32_t> first_in_b;
    first_in_b.reserve(cloud_b.size());
    for (std::size_t j = 0; j < cloud_b.size(); ++j) {
      if (cloud_b.source_ids[j] == kNoSource) continue;
      first_in_b.emplace(cloud_b.source_ids[j], static_cast<std::uint32_t>(j));
    }
    for (std::size_t i = 0; i < cloud_a.size(); ++i) {
      if (cloud_a.source_ids[i] == kNoSource) continue;
      auto it = first_in_b.find(cloud_a.source_ids[i]);
      if (it != first_in_b.end()) matches.pairs.emplace_back(static_cast<std::uint32_t>(i), it->second);
    }
    return matches;
  }

  if (!(radius_m > 0.0)) throw Error(Errc::kInvalidArgument, "by_radius matching needs radius_m > 0");
  matches.radius = radius_m;
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> grid;
  grid.reserve(cloud_b.size());
  for (std::size_t j = 0; j < cloud_b.size(); ++j) {
    grid[voxel_of(cloud_b.positions[j], radius_m)].push_back(static_cast<std::uint32_t>(j));
  }
  std::vector<bool> used(cloud_b.size(), false);
  const double r2 = radius_m * radius_m;
  for (std::size_t i = 0; i < cloud_a.size(); ++i) {
    const Vec3& p = cloud_a.positions[i];
    const VoxelKey k = voxel_of(p, radius_m);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::uint32_t best = 0;
    bool found = false;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == grid.end()) continue;
          for (std::uint32_t j : it->second) {
            if (used[j]) continue;
            const double d2 = (cloud_b.positions[j] - p).squaredNorm();
            if (d2 > r2) continue;
            if (d2 < best_d2 || (d2 == best_d2 && j < best)) {
              best_d2 = d2;
              best = j;
              found = true;
            }
          }
        }
      }
    }
    if (found) {
      used[best] = true;
      matches.pairs.emplace_back(static_cast<std::uint32_t>(i), best);
    }
  }
  return matches;
}

}  // namespace pgov
