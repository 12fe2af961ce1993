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

#include "svf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "svf/error.hpp"
#include "svf/rng.hpp"

namespace svf {

namespace {

constexpr int kPlacementAttempts = 1000;
constexpr double kDeg = std::numbers::pi / 180.0;

const std::vector<std::string> kMaterials = {"wood", "metal", "fabric", "plastic", "glass"};
const std::vector<std::string> kColors = {"white", "black", "brown", "gray", "blue", "red"};
const std::vector<std::string> kShapes = {"rectangular", "cubic", "flat", "tall"};

std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const OrientedBox3D& box) {
  const Mat3 rt = box.rotation().transpose();
  const Vec3 o = rt * (origin - box.center());
  const Vec3 d = rt * dir;
  const Vec3 h = 0.5 * box.dims();
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(d(ax)) < 1e-15) {
      if (std::abs(o(ax)) > h(ax)) return std::nullopt;
      continue;
    }
    double t0 = (-h(ax) - o(ax)) / d(ax);
    double t1 = (h(ax) - o(ax)) / d(ax);
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far <= 0) return std::nullopt;
  return t_near > 0 ? t_near : t_far;
}

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, i);
  return buf;
}

}  // namespace

const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> vocab = {"chair", "table",   "sofa",  "lamp",
                                                 "bed",   "cabinet", "shelf", "desk",
                                                 "plant", "tv",      "bin",   "stool"};
  return vocab;
}

std::optional<double> ray_cast_depth(const std::vector<ObjectAnnotation>& objects,
                                     const RigidPose& camera_to_world, const CameraIntrinsics& k,
                                     double u, double v) {
  const Vec3 dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Vec3 origin = camera_to_world.translation();
  const Vec3 dir = camera_to_world.rotation() * dir_cam;
  std::optional<double> best;
  if (dir.y() > 1e-12) {
    const double t = -origin.y() / dir.y();
    if (t > 0) best = t;
  }
  for (const auto& obj : objects) {
    const auto t = ray_box(origin, dir, obj.box_world);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

DepthMap render_depth(const std::vector<ObjectAnnotation>& objects,
                      const RigidPose& camera_to_world, const CameraIntrinsics& k) {
  DepthMap depth(k.width, k.height, 0.0f);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const auto t = ray_cast_depth(objects, camera_to_world, k, u, v);
      if (t) depth.at(u, v) = static_cast<float>(*t);
    }
  }
  return depth;
}

Scene generate_synthetic_scene(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.num_objects < 0 || spec.num_frames <= 0 || !(spec.fps > 0) ||
      !(spec.room_half_extent > 0) || !(spec.min_size > 0) || spec.max_size < spec.min_size ||
      spec.vocabulary.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid synthetic scene spec");
  }
  Rng rng(StableHash().add("synth").add(seed).value());
  Scene scene;
  scene.video_id = numbered("synth_", static_cast<int>(seed % 10000));
  scene.fps = spec.fps;
  scene.split = spec.split;

  // Labels come from a prefix of the vocabulary: each pool label is used once,
  // the remaining objects repeat pool labels (ambiguous and multi-instance
  // questions), and the rest of the vocabulary is left for negative samples.
  const std::size_t label_pool = std::clamp<std::size_t>(
      static_cast<std::size_t>(spec.num_objects) * 3 / 4, 2, spec.vocabulary.size());
  std::vector<std::string> labels(spec.vocabulary.begin(),
                                  spec.vocabulary.begin() + static_cast<std::ptrdiff_t>(label_pool));
  rng.shuffle(labels);
  while (labels.size() < static_cast<std::size_t>(spec.num_objects)) {
    labels.push_back(spec.vocabulary[rng.index(label_pool)]);
  }

  for (int i = 0; i < spec.num_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Vec3 dims(rng.uniform(spec.min_size, spec.max_size), rng.uniform(spec.min_size, spec.max_size),
                      rng.uniform(spec.min_size, spec.max_size));
      const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double reach = spec.room_half_extent - 0.5 * std::max(dims.x(), dims.z());
      if (reach <= 0) continue;
      const Vec3 center(rng.uniform(-reach, reach), -(spec.clearance + 0.5 * dims.y()),
                        rng.uniform(-reach, reach));
      const OrientedBox3D candidate(center, dims, yaw);
      const OrientedBox3D grown(center, dims + Vec3(spec.min_gap, 0, spec.min_gap), yaw);
      const bool collides = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const auto& o) {
        return footprint_intersection_area(grown, o.box_world) > 0.0;
      });
      if (collides) continue;
      scene.objects.push_back(ObjectAnnotation{
          .object_id = numbered("obj_", i),
          .label = labels[static_cast<std::size_t>(i)],
          .material = kMaterials[rng.index(kMaterials.size())],
          .color = kColors[rng.index(kColors.size())],
          .shape = kShapes[rng.index(kShapes.size())],
          .box_world = candidate,
      });
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::kSpecInfeasible,
                  "could not place object " + std::to_string(i) + " of " +
                      std::to_string(spec.num_objects) + " without overlap in " +
                      std::to_string(kPlacementAttempts) + " attempts");
    }
  }

  const CameraIntrinsics k(spec.focal, spec.focal, 0.5 * spec.image_width, 0.5 * spec.image_height,
                           spec.image_width, spec.image_height);
  double orbit = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < spec.num_frames; ++i) {
    if (i > 0) orbit += rng.uniform(3.0, 10.0) * kDeg;
    const double radius = spec.camera_distance * rng.uniform(0.92, 1.08);
    const Vec3 position(radius * std::sin(orbit), -spec.camera_height, radius * std::cos(orbit));
    const double heading =
        std::atan2(-position.x(), -position.z()) + rng.uniform(-4.0, 4.0) * kDeg;
    Frame frame{
        .frame_id = numbered("f", i),
        .timestamp = i / spec.fps,
        .image = "frames/" + numbered("f", i) + ".jpg",
        .intrinsics = k,
        .pose = RigidPose::from_yaw(heading, position),
    };
    DepthMap gt = render_depth(scene.objects, frame.pose, k);
    DepthMap arkit = gt;
    DepthMap mono = gt;
    const double mono_bias = rng.uniform(0.95, 1.05);
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const float z = gt.at(u, v);
        if (!DepthMap::is_valid(z)) continue;
        arkit.at(u, v) = static_cast<float>(z * (1.0 + 0.01 * rng.normal()));
        mono.at(u, v) = static_cast<float>(z * mono_bias * (1.0 + 0.04 * rng.normal()));
      }
    }
    frame.depth.emplace(DepthSource::kGroundTruth, std::move(gt));
    frame.depth.emplace(DepthSource::kArkit, std::move(arkit));
    frame.depth.emplace(DepthSource::kMonocular, std::move(mono));
    scene.frames.push_back(std::move(frame));
  }
  annotate_scene(scene);
  return scene;
}

}  // namespace svf
