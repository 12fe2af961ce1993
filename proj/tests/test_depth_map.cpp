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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "svf/depth_map.hpp"
#include "svf/error.hpp"

using namespace svf;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("median_depth") {
  DepthMap uniform(10, 10, 2.0f);
  CHECK(median_depth(uniform, Box2D(2, 2, 6, 6)) == 2.0);

  std::vector<float> ramp(9);
  for (int i = 0; i < 9; ++i) ramp[i] = static_cast<float>(9 - i);  // 9..1, order must not matter
  DepthMap three(3, 3, ramp);
  CHECK(median_depth(three, Box2D(0, 0, 2, 2)) == 5.0);

  DepthMap four(2, 2, std::vector<float>{4, 1, 3, 2});
  CHECK(median_depth(four, Box2D(0, 0, 1, 1)) == 2.5);

  DepthMap holes(2, 2, std::vector<float>{0, -1, std::numeric_limits<float>::quiet_NaN(),
                                          std::numeric_limits<float>::infinity()});
  CHECK_FALSE(median_depth(holes, Box2D(0, 0, 1, 1)).has_value());
  CHECK_FALSE(median_depth(uniform, Box2D(20, 20, 30, 30)).has_value());

  // Median ignores invalid pixels.
  DepthMap mixed(3, 1, std::vector<float>{0, 1, 3});
  CHECK(median_depth(mixed, Box2D(0, 0, 2, 0)) == 2.0);
}

TEST_CASE("median matches sort-and-middle on random data") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<float> u(-0.5f, 8.0f);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> values(12 * 9);
    for (auto& v : values) v = u(gen);
    const DepthMap d(12, 9, values);
    const Box2D box(1.3, 0.2, 9.9, 7.0);
    std::vector<double> inside;
    for (int v = 1; v <= 7; ++v) {
      for (int x = 2; x <= 9; ++x) {
        const float z = values[v * 12 + x];
        if (z > 0) inside.push_back(z);
      }
    }
    std::sort(inside.begin(), inside.end());
    const auto got = median_depth(d, box);
    REQUIRE(got);
    const std::size_t n = inside.size();
    const double expect = n % 2 ? inside[n / 2] : 0.5 * (inside[n / 2 - 1] + inside[n / 2]);
    CHECK(*got == expect);
  }
}

TEST_CASE("backproject_depth") {
  SUBCASE("principal pixel") {
    const CameraIntrinsics k(50, 50, 4, 3, 8, 6);
    const PointCloud cloud = backproject_depth(DepthMap(8, 6, 2.0f), k);
    CHECK(std::find(cloud.begin(), cloud.end(), Vec3(0, 0, 2)) != cloud.end());
  }
  SUBCASE("2x2 unit intrinsics") {
    const CameraIntrinsics k(1, 1, 0, 0, 2, 2);
    const PointCloud cloud = backproject_depth(DepthMap(2, 2, 1.0f), k);
    REQUIRE(cloud.size() == 4);
    CHECK(cloud[0] == Vec3(0, 0, 1));
    CHECK(cloud[1] == Vec3(1, 0, 1));
    CHECK(cloud[2] == Vec3(0, 1, 1));
    CHECK(cloud[3] == Vec3(1, 1, 1));
  }
  SUBCASE("invalid region") {
    const CameraIntrinsics k(1, 1, 0, 0, 2, 2);
    CHECK(code_of([&] { backproject_depth(DepthMap(2, 2, 0.0f), k); }) == ErrorCode::kEmptyRegion);
    CHECK(code_of([&] { backproject_depth(DepthMap(3, 2, 1.0f), k); }) ==
          ErrorCode::kIntrinsicsMismatch);
  }
  SUBCASE("round trip through projection") {
    const CameraIntrinsics k(80.5, 77.25, 31.5, 22.75, 64, 48);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<float> u(0.3f, 12.0f);
    std::vector<float> values(64 * 48);
    for (auto& v : values) v = u(gen);
    const PointCloud cloud = backproject_depth(DepthMap(64, 48, values), k);
    REQUIRE(cloud.size() == values.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto px = project_point(cloud[i], k);
      REQUIRE(px);
      CHECK(std::abs(px->u - static_cast<double>(i % 64)) < 1e-4);
      CHECK(std::abs(px->v - static_cast<double>(i / 64)) < 1e-4);
    }
  }
}

TEST_CASE("CAVD file format") {
  const auto dir = std::filesystem::temp_directory_path() / "svf_test_cavd";
  std::filesystem::create_directories(dir);
  const DepthMap d(3, 2, std::vector<float>{1.5f, 0.0f, -2.0f, 4.25f, 1e-3f, 7.0f});
  write_cavd(dir / "a.cavd", d);

  std::ifstream in(dir / "a.cavd", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 12 + 6 * 4);
  CHECK(bytes[0] == 'C');
  CHECK(bytes[3] == 'D');
  CHECK(bytes[4] == 3);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);
  // 1.5f == 0x3FC00000, little-endian.
  CHECK(bytes[12] == 0x00);
  CHECK(bytes[14] == 0xC0);
  CHECK(bytes[15] == 0x3F);

  CHECK(read_cavd(dir / "a.cavd") == d);

  std::ofstream(dir / "bad.cavd", std::ios::binary) << "XXXX";
  CHECK(code_of([&] { read_cavd(dir / "bad.cavd"); }) == ErrorCode::kSchemaViolation);
  CHECK(code_of([&] { read_cavd(dir / "missing.cavd"); }) == ErrorCode::kMissingFile);
  std::filesystem::remove_all(dir);
}
