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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svf/depth_map.hpp"
#include "svf/geometry.hpp"

namespace svf {

struct ObjectAnnotation {
  std::string object_id;
  std::string label;
  std::optional<std::string> material;
  std::optional<std::string> color;
  std::optional<std::string> shape;
  OrientedBox3D box_world;
};

struct VisibleObject {
  std::string object_id;
  OrientedBox3D box_camera;  // amodal, camera frame
  Box2D box2d;               // projection hull clipped to the image
};

struct Frame {
  std::string frame_id;
  double timestamp = 0.0;
  std::string image;  // opaque reference, never decoded
  CameraIntrinsics intrinsics;
  RigidPose pose;  // camera-to-world
  std::map<DepthSource, DepthMap> depth;
  std::vector<VisibleObject> visible_objects;
  std::vector<std::string> support_frames;  // oldest first, at most 4

  const DepthMap* depth_map(DepthSource source) const {
    auto it = depth.find(source);
    return it == depth.end() ? nullptr : &it->second;
  }
};

enum class Split { kTrain, kEval };

struct Scene {
  std::string video_id;
  double fps = 30.0;
  Split split = Split::kTrain;
  std::vector<Frame> frames;
  std::vector<ObjectAnnotation> objects;

  const ObjectAnnotation& object(const std::string& object_id) const;
  const Frame* find_frame(const std::string& frame_id) const;
};

// Reads a scene directory (scene.json, frames/<id>.json, frames/<id>.<src>.cavd)
// and computes per-frame visibility and support frames. Throws MissingFile,
// SchemaViolation (message names the file) or IntrinsicsMismatch.
Scene load_scene(const std::filesystem::path& root);
// `root` is one scene directory, or a directory whose subdirectories are
// scenes (sorted by name). Throws MissingFile when neither holds.
std::vector<Scene> load_scenes(const std::filesystem::path& root);
// Writes the same layout. Only fields of the layout are emitted.
void save_scene(const Scene& scene, const std::filesystem::path& root);

// Greedy sub-sampling anchored at the first frame: a frame is kept when at
// least 1/target_fps seconds passed since the last kept one.
Scene subsample_frames(const Scene& scene, double target_fps);

// Objects with a corner in front of the camera whose amodal 2D hull overlaps
// the image. Ignores occlusion.
std::vector<VisibleObject> compute_visibility(const Scene& scene, const Frame& frame);

inline constexpr double kSupportRotationTrigger = 15.0;   // degrees
inline constexpr double kSupportTranslationTrigger = 0.30;  // meters

// Walks backwards from `ref`, chaining key frames: an earlier frame becomes a
// support frame (and the new key frame) once its pose differs from the
// current key frame by >= 15 degrees or >= 0.30 m. Returns oldest first.
std::vector<std::string> select_support_frames(const Scene& scene, const Frame& ref, int max_n = 4);

// Pose of the support camera in reference-camera coordinates.
RigidPose relative_pose(const Frame& ref, const Frame& support);

// Fills visible_objects and support_frames of every frame.
void annotate_scene(Scene& scene);

}  // namespace svf
