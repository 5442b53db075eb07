#pragma once

#include <Eigen/Core>

#include "pgov/common.hpp"

namespace pgov {

// Pinhole intrinsics in pixels. Pixel (u, v) is the column/row index and the
// ray of integer pixel (u, v) passes through the image point (u, v) itself.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

// Rigid camera-to-world transform: x_world = rotation * x_cam + translation.
// Camera frame: +z along the optical axis, +x right, +y down.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up);

  Vec3 to_world(const Vec3& camera_point) const { return rotation * camera_point + translation; }
  Vec3 to_camera(const Vec3& world_point) const {
    return rotation.transpose() * (world_point - translation);
  }
  Eigen::Matrix4d matrix() const;
  static CameraPose from_matrix(const Eigen::Matrix4d& m);

  // Throws InvalidArgument unless R^T R = I and det R = +1 within 1e-9.
  void validate() const;
  bool operator==(const CameraPose& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

}  // namespace pgov
