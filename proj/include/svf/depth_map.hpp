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

#include <cmath>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "svf/geometry.hpp"

namespace svf {

enum class DepthSource { kGroundTruth, kArkit, kMonocular };

// File/protocol token: "gt", "arkit", "mono".
std::string_view depth_source_name(DepthSource source);
DepthSource parse_depth_source(std::string_view name);

// Dense metric depth, row-major, top-left origin. Pixel (u, v) sits at image
// coordinate (u, v): projecting its backprojected point returns exactly (u, v).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, std::vector<float> values);
  DepthMap(int width, int height, float fill);

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int u, int v) const { return values_[static_cast<std::size_t>(v) * width_ + u]; }
  float& at(int u, int v) { return values_[static_cast<std::size_t>(v) * width_ + u]; }
  const std::vector<float>& values() const { return values_; }

  static bool is_valid(float z) { return z > 0.0f && std::isfinite(z); }

  bool operator==(const DepthMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

// Inclusive integer pixel range covered by a box: pixel u is inside when
// x_min <= u <= x_max, clamped to the image. Empty when the box misses it.
struct PixelRange {
  int u0, v0, u1, v1;
  bool empty() const { return u0 > u1 || v0 > v1; }
};
PixelRange pixel_range(const Box2D& box, int width, int height);

// Valid depths inside the box, in row-major scan order.
std::vector<double> valid_depths_in_box(const DepthMap& depth, const Box2D& box);

// Median of the valid depths inside the box; the mean of the two middle values
// for even counts. nullopt when the box holds no valid pixel. This is the one
// median rule shared by CoT generation, the depth tool, and evaluation.
std::optional<double> median_depth(const DepthMap& depth, const Box2D& box);

// Backprojects valid pixels of `region` (whole image when absent). Throws
// IntrinsicsMismatch when dimensions differ and EmptyRegion when no valid
// pixel is found.
PointCloud backproject_depth(const DepthMap& depth, const CameraIntrinsics& k,
                             const std::optional<Box2D>& region = std::nullopt);

// CAVD file: "CAVD", u32 LE width, u32 LE height, width*height f32 LE.
void write_cavd(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_cavd(const std::filesystem::path& path);

}  // namespace svf
