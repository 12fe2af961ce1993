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

#include "svf/depth_map.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "svf/error.hpp"

namespace svf {

namespace {

constexpr char kCavdMagic[4] = {'C', 'A', 'V', 'D'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string_view depth_source_name(DepthSource source) {
  switch (source) {
    case DepthSource::kGroundTruth: return "gt";
    case DepthSource::kArkit: return "arkit";
    case DepthSource::kMonocular: return "mono";
  }
  return "gt";
}

DepthSource parse_depth_source(std::string_view name) {
  if (name == "gt") return DepthSource::kGroundTruth;
  if (name == "arkit") return DepthSource::kArkit;
  if (name == "mono" || name == "monocular") return DepthSource::kMonocular;
  throw Error(ErrorCode::kInvalidArgument, "unknown depth source '" + std::string(name) + "'");
}

DepthMap::DepthMap(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0 ||
      values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kInvalidArgument, "depth map size does not match its dimensions");
  }
}

DepthMap::DepthMap(int width, int height, float fill)
    : DepthMap(width, height,
               std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                      static_cast<std::size_t>(std::max(height, 0)),
                                  fill)) {}

PixelRange pixel_range(const Box2D& box, int width, int height) {
  PixelRange r;
  r.u0 = static_cast<int>(std::max(0.0, std::ceil(box.x_min)));
  r.v0 = static_cast<int>(std::max(0.0, std::ceil(box.y_min)));
  r.u1 = static_cast<int>(std::min(static_cast<double>(width - 1), std::floor(box.x_max)));
  r.v1 = static_cast<int>(std::min(static_cast<double>(height - 1), std::floor(box.y_max)));
  return r;
}

std::vector<double> valid_depths_in_box(const DepthMap& depth, const Box2D& box) {
  std::vector<double> out;
  const PixelRange r = pixel_range(box, depth.width(), depth.height());
  if (r.empty()) return out;
  for (int v = r.v0; v <= r.v1; ++v) {
    for (int u = r.u0; u <= r.u1; ++u) {
      const float z = depth.at(u, v);
      if (DepthMap::is_valid(z)) out.push_back(z);
    }
  }
  return out;
}

std::optional<double> median_depth(const DepthMap& depth, const Box2D& box) {
  std::vector<double> values = valid_depths_in_box(depth, box);
  if (values.empty()) return std::nullopt;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

PointCloud backproject_depth(const DepthMap& depth, const CameraIntrinsics& k,
                             const std::optional<Box2D>& region) {
  if (depth.width() != k.width || depth.height() != k.height) {
    throw Error(ErrorCode::kIntrinsicsMismatch, "depth map dimensions differ from intrinsics");
  }
  const Box2D box = region.value_or(Box2D(0, 0, k.width - 1, k.height - 1));
  const PixelRange r = pixel_range(box, depth.width(), depth.height());
  PointCloud cloud;
  if (!r.empty()) {
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) {
        const float zf = depth.at(u, v);
        if (!DepthMap::is_valid(zf)) continue;
        const double z = zf;
        cloud.emplace_back((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
      }
    }
  }
  if (cloud.empty()) throw Error(ErrorCode::kEmptyRegion, "no valid depth pixel in region");
  return cloud;
}

void write_cavd(const std::filesystem::path& path, const DepthMap& depth) {
  std::vector<char> bytes(std::begin(kCavdMagic), std::end(kCavdMagic));
  bytes.reserve(12 + depth.values().size() * 4);
  put_u32(bytes, static_cast<std::uint32_t>(depth.width()));
  put_u32(bytes, static_cast<std::uint32_t>(depth.height()));
  for (float z : depth.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(z));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DepthMap read_cavd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !std::equal(std::begin(kCavdMagic), std::end(kCavdMagic), bytes.begin())) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": missing CAVD header");
  }
  const std::uint32_t width = get_u32(bytes, 4);
  const std::uint32_t height = get_u32(bytes, 8);
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (width == 0 || height == 0 || bytes.size() != 12 + count * 4) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": payload size does not match header");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
  return DepthMap(static_cast<int>(width), static_cast<int>(height), std::move(values));
}

}  // namespace svf
