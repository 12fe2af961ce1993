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

#include "svf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <Eigen/LU>

#include "svf/error.hpp"

namespace svf {

namespace {

constexpr double kMinBoxDim = 1e-6;
constexpr double kBehindCameraZ = 1e-6;
constexpr double kOrthonormalTol = 1e-6;
constexpr double kGravityTol = 1e-3;
constexpr std::size_t kBruteForcePairLimit = 100'000'000;

struct Vec2 {
  double x;
  double y;
};

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

// Footprint rectangle on the (x, z) plane, counter-clockwise.
std::vector<Vec2> footprint(const OrientedBox3D& box) {
  const double c = std::cos(box.yaw());
  const double s = std::sin(box.yaw());
  const double hx = 0.5 * box.dims().x();
  const double hz = 0.5 * box.dims().z();
  std::vector<Vec2> poly;
  poly.reserve(4);
  for (const auto& [lx, lz] : {std::pair{hx, hz}, {-hx, hz}, {-hx, -hz}, {hx, -hz}}) {
    poly.push_back({box.center().x() + c * lx + s * lz, box.center().z() - s * lx + c * lz});
  }
  if (polygon_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
std::vector<Vec2> clip_convex(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2& p = subject[i];
      const Vec2& q = subject[(i + 1) % subject.size()];
      const double dp = cross(a, b, p);
      const double dq = cross(a, b, q);
      if (dp >= 0) out.push_back(p);
      if ((dp >= 0) != (dq >= 0)) {
        const double t = dp / (dp - dq);
        out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

void require_nonempty(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "point cloud is empty");
}

}  // namespace

Mat3 yaw_rotation(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
      -s, 0, c;
  return r;
}

double wrap_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = radians - kTwoPi * std::floor((radians + std::numbers::pi) / kTwoPi);
  if (r >= std::numbers::pi) r -= kTwoPi;
  if (r < -std::numbers::pi) r += kTwoPi;
  return r;
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  const double cos_angle = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(cos_angle);
}

RigidPose::RigidPose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose has non-finite entries");
  }
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kOrthonormalTol || std::abs(rotation.determinant() - 1.0) > kOrthonormalTol) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation is not a proper rotation");
  }
}

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidPose RigidPose::operator*(const RigidPose& other) const {
  RigidPose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

std::array<double, 12> RigidPose::to_row_major() const {
  std::array<double, 12> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 4 + c] = rotation_(r, c);
    m[r * 4 + 3] = translation_(r);
  }
  return m;
}

RigidPose RigidPose::from_row_major(const std::array<double, 12>& m) {
  Mat3 r;
  Vec3 t;
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) r(i, c) = m[i * 4 + c];
    t(i) = m[i * 4 + 3];
  }
  return RigidPose(r, t);
}

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int width_,
                                   int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
  if (!(fx > 0) || !(fy > 0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

OrientedBox3D::OrientedBox3D(const Vec3& center, const Vec3& dims, double yaw)
    : center_(center), dims_(dims), yaw_(wrap_angle(yaw)) {
  if (!center.allFinite() || !dims.allFinite() || !std::isfinite(yaw)) {
    throw Error(ErrorCode::kInvalidArgument, "box has non-finite values");
  }
  if (dims.minCoeff() < kMinBoxDim) {
    throw Error(ErrorCode::kInvalidArgument, "box dimensions must be at least 1e-6 m");
  }
}

std::array<Vec3, 8> OrientedBox3D::corners() const {
  const Mat3 r = rotation();
  const Vec3 h = 0.5 * dims_;
  std::array<Vec3, 8> out;
  int i = 0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        out[i++] = center_ + r * Vec3(sx * h.x(), sy * h.y(), sz * h.z());
      }
    }
  }
  return out;
}

bool OrientedBox3D::contains(const Vec3& p, double margin) const {
  const Vec3 local = rotation().transpose() * (p - center_);
  const Vec3 h = 0.5 * dims_ + Vec3::Constant(margin);
  return std::abs(local.x()) <= h.x() && std::abs(local.y()) <= h.y() &&
         std::abs(local.z()) <= h.z();
}

OrientedBox3D OrientedBox3D::scaled(double factor) const {
  return OrientedBox3D(center_ * factor, dims_ * factor, yaw_);
}

bool AxisAlignedBox3D::contains(const Vec3& p, double tol) const {
  return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
}

Box2D::Box2D(double x0, double y0, double x1, double y1)
    : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
  if (!(x_min <= x_max) || !(y_min <= y_max)) {
    throw Error(ErrorCode::kInvalidArgument, "Box2D requires min <= max");
  }
}

Vec3 world_to_camera(const Vec3& p, const RigidPose& camera_to_world) {
  return camera_to_world.rotation().transpose() * (p - camera_to_world.translation());
}

Vec3 camera_to_world(const Vec3& p, const RigidPose& camera_to_world) {
  return camera_to_world.apply(p);
}

OrientedBox3D transform_box(const OrientedBox3D& world_box, const RigidPose& camera_to_world) {
  const Mat3& r = camera_to_world.rotation();
  if ((r.col(1) - Vec3::UnitY()).norm() > kGravityTol) {
    throw Error(ErrorCode::kNonGravityAlignedPose,
                "camera rotation does not preserve the vertical axis");
  }
  const double heading = std::atan2(r(0, 2), r(0, 0));
  return OrientedBox3D(world_to_camera(world_box.center(), camera_to_world), world_box.dims(),
                       world_box.yaw() - heading);
}

std::optional<Pixel> project_point(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z() > kBehindCameraZ)) return std::nullopt;
  return Pixel{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Box2D project_box_to_2d(const OrientedBox3D& box, const CameraIntrinsics& k, bool clip) {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  bool any = false;
  for (const Vec3& c : box.corners()) {
    const auto px = project_point(c, k);
    if (!px) continue;
    any = true;
    x0 = std::min(x0, px->u);
    x1 = std::max(x1, px->u);
    y0 = std::min(y0, px->v);
    y1 = std::max(y1, px->v);
  }
  if (!any) throw Error(ErrorCode::kFullyBehindCamera, "all box corners are behind the camera");
  if (clip) {
    const double w = k.width;
    const double h = k.height;
    x0 = std::clamp(x0, 0.0, w);
    x1 = std::clamp(x1, 0.0, w);
    y0 = std::clamp(y0, 0.0, h);
    y1 = std::clamp(y1, 0.0, h);
  }
  return Box2D(x0, y0, x1, y1);
}

AxisAlignedBox3D obb_to_aabb(const OrientedBox3D& box) {
  const double c = std::abs(std::cos(box.yaw()));
  const double s = std::abs(std::sin(box.yaw()));
  const Vec3& d = box.dims();
  const Vec3 half(0.5 * (d.x() * c + d.z() * s), 0.5 * d.y(), 0.5 * (d.x() * s + d.z() * c));
  return {box.center() - half, box.center() + half};
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double footprint_intersection_area(const OrientedBox3D& a, const OrientedBox3D& b) {
  const auto poly = clip_convex(footprint(a), footprint(b));
  if (poly.size() < 3) return 0.0;
  return std::abs(polygon_area(poly));
}

double iou_3d_yaw(const OrientedBox3D& a, const OrientedBox3D& b) {
  const double a_lo = a.center().y() - 0.5 * a.dims().y();
  const double a_hi = a.center().y() + 0.5 * a.dims().y();
  const double b_lo = b.center().y() - 0.5 * b.dims().y();
  const double b_hi = b.center().y() + 0.5 * b.dims().y();
  const double overlap_y = std::min(a_hi, b_hi) - std::max(a_lo, b_lo);
  if (overlap_y <= 0.0) return 0.0;
  const double inter = footprint_intersection_area(a, b) * overlap_y;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace detail {

double min_cloud_distance_brute_force(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a);
  require_nonempty(b);
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : a) {
    for (const Vec3& q : b) best = std::min(best, (p - q).squaredNorm());
  }
  return std::sqrt(best);
}

double min_cloud_distance_grid(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a);
  require_nonempty(b);
  Vec3 lo = b.front();
  Vec3 hi = b.front();
  for (const Vec3& q : b) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
  // Roughly a handful of points per occupied cell.
  double cell = std::cbrt(extent.prod() / static_cast<double>(b.size()) * 4.0);
  cell = std::max({cell, extent.maxCoeff() / 1024.0, 1e-6});

  using Key = std::int64_t;
  auto cell_of = [&](const Vec3& p) {
    return Eigen::Vector3<std::int64_t>(
        static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / cell)),
        static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / cell)),
        static_cast<std::int64_t>(std::floor((p.z() - lo.z()) / cell)));
  };
  auto key_of = [](std::int64_t x, std::int64_t y, std::int64_t z) -> Key {
    return ((x & 0x1fffff) << 42) | ((y & 0x1fffff) << 21) | (z & 0x1fffff);
  };
  std::unordered_map<Key, std::vector<std::size_t>> grid;
  const auto max_cell = cell_of(hi);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto c = cell_of(b[i]);
    grid[key_of(c.x(), c.y(), c.z())].push_back(i);
  }

  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : a) {
    const auto qc = cell_of(p);
    // Largest ring that can still contain grid cells.
    std::int64_t max_ring = 0;
    for (int ax = 0; ax < 3; ++ax) {
      max_ring = std::max({max_ring, std::abs(qc(ax)), std::abs(max_cell(ax) - qc(ax))});
    }
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      // Points in ring r are at least (r - 1) * cell away from p.
      const double ring_floor = static_cast<double>(std::max<std::int64_t>(r - 1, 0)) * cell;
      if (ring_floor * ring_floor > best) break;
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        const std::int64_t x = qc.x() + dx;
        if (x < 0 || x > max_cell.x()) continue;
        for (std::int64_t dy = -r; dy <= r; ++dy) {
          const std::int64_t y = qc.y() + dy;
          if (y < 0 || y > max_cell.y()) continue;
          const bool on_shell_xy = std::abs(dx) == r || std::abs(dy) == r;
          const std::int64_t step = on_shell_xy ? 1 : 2 * r;
          for (std::int64_t dz = -r; dz <= r; dz += (step == 0 ? 1 : step)) {
            const std::int64_t z = qc.z() + dz;
            if (z < 0 || z > max_cell.z()) continue;
            const auto it = grid.find(key_of(x, y, z));
            if (it == grid.end()) continue;
            for (std::size_t idx : it->second) best = std::min(best, (p - b[idx]).squaredNorm());
          }
        }
      }
    }
  }
  return std::sqrt(best);
}

}  // namespace detail

double min_cloud_distance(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a);
  require_nonempty(b);
  if (a.size() * b.size() <= kBruteForcePairLimit) {
    return detail::min_cloud_distance_brute_force(a, b);
  }
  return detail::min_cloud_distance_grid(a, b);
}

double egocentric_distance(const PointCloud& cloud) {
  require_nonempty(cloud);
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : cloud) best = std::min(best, p.squaredNorm());
  return std::sqrt(best);
}

double center_distance(const OrientedBox3D& a, const OrientedBox3D& b) {
  return (a.center() - b.center()).norm();
}

ObjectDimensions object_dimensions(const OrientedBox3D& box) {
  const Vec3& d = box.dims();
  return {std::max(d.x(), d.z()), std::min(d.x(), d.z()), d.y()};
}

}  // namespace svf
