/* Copyright 2026 The SVF Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace svf {

// Camera frame: +z forward, +x right, +y down (image rows grow with y).
// World frame: the vertical axis is y and "up" is -y, so level cameras have
// rotations about y only and box yaw is a rotation about y.

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using PointCloud = std::vector<Vec3>;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Rotation about the vertical (y) axis.
Mat3 yaw_rotation(double yaw);

// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const Mat3& a, const Mat3& b);

// Rigid transform with an orthonormal, right-handed rotation. Frames store
// camera-to-world poses: apply() maps camera coordinates to world.
class RigidPose {
 public:
  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidPose(const Mat3& rotation, const Vec3& translation);

  static RigidPose from_yaw(double yaw, const Vec3& translation) {
    return RigidPose(yaw_rotation(yaw), translation);
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  RigidPose inverse() const;
  // (a * b).apply(p) == a.apply(b.apply(p))
  RigidPose operator*(const RigidPose& other) const;

  // Row-major 3x4 [R|t].
  std::array<double, 12> to_row_major() const;
  static RigidPose from_row_major(const std::array<double, 12>& m);

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

struct CameraIntrinsics {
  CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height);

  double fx;
  double fy;
  double cx;
  double cy;
  int width;
  int height;

  bool operator==(const CameraIntrinsics&) const = default;
};

// Gravity-aligned 7-DOF box. dims = (x_len, y_len, z_len) in the box's local
// frame; y_len is the vertical extent.
class OrientedBox3D {
 public:
  // Throws InvalidArgument on non-finite values or any dim below 1e-6 m.
  OrientedBox3D(const Vec3& center, const Vec3& dims, double yaw);

  const Vec3& center() const { return center_; }
  const Vec3& dims() const { return dims_; }
  double yaw() const { return yaw_; }

  Mat3 rotation() const { return yaw_rotation(yaw_); }
  double volume() const { return dims_.prod(); }
  std::array<Vec3, 8> corners() const;
  // True when p lies inside the box grown by `margin` on every side.
  bool contains(const Vec3& p, double margin = 0.0) const;
  OrientedBox3D scaled(double factor) const;

  bool operator==(const OrientedBox3D& other) const {
    return center_ == other.center_ && dims_ == other.dims_ && yaw_ == other.yaw_;
  }

 private:
  Vec3 center_;
  Vec3 dims_;
  double yaw_;
};

struct AxisAlignedBox3D {
  Vec3 min;
  Vec3 max;

  Vec3 extents() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p, double tol = 0.0) const;
};

struct Box2D {
  Box2D() = default;
  // Throws InvalidArgument unless x_min <= x_max and y_min <= y_max.
  Box2D(double x_min, double y_min, double x_max, double y_max);

  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool operator==(const Box2D&) const = default;
};

Vec3 world_to_camera(const Vec3& p, const RigidPose& camera_to_world);
Vec3 camera_to_world(const Vec3& p, const RigidPose& camera_to_world);

// Re-expresses a world-frame box in camera coordinates. Throws
// NonGravityAlignedPose if the pose rotation moves the vertical axis by more
// than 1e-3.
OrientedBox3D transform_box(const OrientedBox3D& world_box, const RigidPose& camera_to_world);

// Pinhole projection; nullopt when z <= 1e-6 (behind the camera).
std::optional<Pixel> project_point(const Vec3& p, const CameraIntrinsics& k);

// 2D hull of the projected corners in front of the camera, clamped to the
// image when `clip` is set. Throws FullyBehindCamera when no corner projects.
Box2D project_box_to_2d(const OrientedBox3D& box, const CameraIntrinsics& k, bool clip);

AxisAlignedBox3D obb_to_aabb(const OrientedBox3D& box);

double iou_2d(const Box2D& a, const Box2D& b);

// Area of the intersection of the two yaw-rotated footprints (x-z plane).
double footprint_intersection_area(const OrientedBox3D& a, const OrientedBox3D& b);
double iou_3d_yaw(const OrientedBox3D& a, const OrientedBox3D& b);

// Minimum pairwise distance. Exact brute force up to 1e8 pairs, an exact
// uniform-grid search above. Throws EmptyCloud.
double min_cloud_distance(const PointCloud& a, const PointCloud& b);
// Distance from the camera (origin) to the nearest point. Throws EmptyCloud.
double egocentric_distance(const PointCloud& cloud);
double center_distance(const OrientedBox3D& a, const OrientedBox3D& b);

struct ObjectDimensions {
  double width;   // larger horizontal edge
  double length;  // smaller horizontal edge
  double height;  // vertical edge
};

ObjectDimensions object_dimensions(const OrientedBox3D& box);

namespace detail {
double min_cloud_distance_brute_force(const PointCloud& a, const PointCloud& b);
double min_cloud_distance_grid(const PointCloud& a, const PointCloud& b);
}  // namespace detail

}  // namespace svf
