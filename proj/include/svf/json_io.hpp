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

#include <json.hpp>

#include "svf/geometry.hpp"

namespace svf {

// Wire forms shared by the record, report and service formats:
// 2D boxes as {x_min, y_min, x_max, y_max}, 3D boxes as {center, dims, yaw}.
// Decoders throw nlohmann or InvalidArgument errors; callers map them to
// SchemaViolation with their own context.

inline nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

inline nlohmann::json box2d_to_json(const Box2D& b) {
  return {{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

inline Box2D box2d_from_json(const nlohmann::json& j) {
  return Box2D(j.at("x_min").get<double>(), j.at("y_min").get<double>(), j.at("x_max").get<double>(),
               j.at("y_max").get<double>());
}

inline nlohmann::json box3d_to_json(const OrientedBox3D& b) {
  return {{"center", vec3_to_json(b.center())}, {"dims", vec3_to_json(b.dims())}, {"yaw", b.yaw()}};
}

inline OrientedBox3D box3d_from_json(const nlohmann::json& j) {
  return OrientedBox3D(vec3_from_json(j.at("center")), vec3_from_json(j.at("dims")),
                       j.at("yaw").get<double>());
}

inline nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  return CameraIntrinsics(j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                          j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>());
}

}  // namespace svf
