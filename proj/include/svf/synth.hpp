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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svf/scene.hpp"

namespace svf {

const std::vector<std::string>& default_vocabulary();

// Parameters for a desk-scale synthetic capture: boxes resting just above a
// floor plane (world y = 0, up is -y) inside a square room, viewed by a level
// camera orbiting the room and looking at its center.
struct SynthSpec {
  int num_objects = 8;
  int num_frames = 20;
  double fps = 1.0;
  double room_half_extent = 3.0;
  double min_size = 0.4;
  double max_size = 1.6;
  double clearance = 0.02;  // gap between box bottoms and the floor
  double min_gap = 0.05;    // minimum horizontal gap between boxes
  int image_width = 192;
  int image_height = 144;
  double focal = 120.0;
  double camera_height = 1.4;
  double camera_distance = 5.0;  // orbit radius around the room center
  std::vector<std::string> vocabulary = default_vocabulary();
  Split split = Split::kTrain;
};

// Deterministic in `seed`. Objects are placed by rejection sampling; throws
// SpecInfeasible when an object finds no free spot in 1000 attempts. Every
// frame carries analytically ray-cast "gt" depth plus noisy "arkit" and
// "mono" variants derived from it.
Scene generate_synthetic_scene(std::uint64_t seed, const SynthSpec& spec);

// Camera z-depth of the first surface hit by the ray through pixel (u, v),
// or nullopt when the ray escapes. Surfaces are the boxes and the floor.
std::optional<double> ray_cast_depth(const std::vector<ObjectAnnotation>& objects,
                                     const RigidPose& camera_to_world, const CameraIntrinsics& k,
                                     double u, double v);

DepthMap render_depth(const std::vector<ObjectAnnotation>& objects,
                      const RigidPose& camera_to_world, const CameraIntrinsics& k);

}  // namespace svf
