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

#include "svf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "svf/error.hpp"
#include "svf/json_io.hpp"

namespace svf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr DepthSource kAllSources[] = {DepthSource::kGroundTruth, DepthSource::kArkit,
                                       DepthSource::kMonocular};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

// Runs a field-decoding step, turning any JSON/type failure into a
// SchemaViolation that names the file.
template <typename Fn>
auto decode(const fs::path& file, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      throw Error(ErrorCode::kSchemaViolation, file.string() + ": " + e.what());
    }
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, file.string() + ": " + e.what());
  }
}

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "eval"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "eval") return Split::kEval;
  throw std::invalid_argument("split must be 'train' or 'eval'");
}

}  // namespace

const ObjectAnnotation& Scene::object(const std::string& object_id) const {
  for (const auto& o : objects) {
    if (o.object_id == object_id) return o;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown object '" + object_id + "'");
}

const Frame* Scene::find_frame(const std::string& frame_id) const {
  for (const auto& f : frames) {
    if (f.frame_id == frame_id) return &f;
  }
  return nullptr;
}

Scene load_scene(const fs::path& root) {
  const fs::path scene_file = root / "scene.json";
  const json sj = read_json_file(scene_file);
  Scene scene = decode(scene_file, [&] {
    Scene s;
    s.video_id = sj.at("video_id").get<std::string>();
    s.fps = sj.at("fps").get<double>();
    if (!(s.fps > 0)) throw std::invalid_argument("fps must be positive");
    s.split = parse_split(sj.value("split", std::string("train")));
    std::set<std::string> seen;
    for (const json& oj : sj.at("objects")) {
      ObjectAnnotation o{
          .object_id = oj.at("object_id").get<std::string>(),
          .label = oj.at("label").get<std::string>(),
          .material = optional_string(oj, "material"),
          .color = optional_string(oj, "color"),
          .shape = optional_string(oj, "shape"),
          .box_world = box3d_from_json(oj.at("box_world")),
      };
      if (o.label.empty()) throw std::invalid_argument("object label is empty");
      if (!seen.insert(o.object_id).second) {
        throw std::invalid_argument("duplicate object_id '" + o.object_id + "'");
      }
      s.objects.push_back(std::move(o));
    }
    return s;
  });

  const fs::path frames_dir = root / "frames";
  if (!fs::is_directory(frames_dir)) throw Error(ErrorCode::kMissingFile, frames_dir.string());
  std::vector<fs::path> frame_files;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (entry.path().extension() == ".json") frame_files.push_back(entry.path());
  }
  std::sort(frame_files.begin(), frame_files.end());

  for (const fs::path& file : frame_files) {
    const json fj = read_json_file(file);
    Frame frame = decode(file, [&] {
      std::array<double, 12> pose{};
      const json& pj = fj.at("pose");
      if (!pj.is_array() || pj.size() != 12) throw std::invalid_argument("pose must hold 12 numbers");
      for (std::size_t i = 0; i < 12; ++i) pose[i] = pj.at(i).get<double>();
      const std::string frame_id = file.stem().string();
      return Frame{
          .frame_id = frame_id,
          .timestamp = fj.at("timestamp").get<double>(),
          .image = fj.value("image", "frames/" + frame_id + ".jpg"),
          .intrinsics = intrinsics_from_json(fj.at("intrinsics")),
          .pose = RigidPose::from_row_major(pose),
      };
    });
    for (DepthSource src : kAllSources) {
      const fs::path depth_file =
          frames_dir / (frame.frame_id + "." + std::string(depth_source_name(src)) + ".cavd");
      if (!fs::exists(depth_file)) continue;
      DepthMap depth = read_cavd(depth_file);
      if (depth.width() != frame.intrinsics.width || depth.height() != frame.intrinsics.height) {
        throw Error(ErrorCode::kIntrinsicsMismatch,
                    depth_file.string() + ": " + std::to_string(depth.width()) + "x" +
                        std::to_string(depth.height()) + " depth vs " +
                        std::to_string(frame.intrinsics.width) + "x" +
                        std::to_string(frame.intrinsics.height) + " intrinsics");
      }
      frame.depth.emplace(src, std::move(depth));
    }
    scene.frames.push_back(std::move(frame));
  }
  std::stable_sort(scene.frames.begin(), scene.frames.end(),
                   [](const Frame& a, const Frame& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < scene.frames.size(); ++i) {
    if (!(scene.frames[i].timestamp > scene.frames[i - 1].timestamp)) {
      throw Error(ErrorCode::kSchemaViolation,
                  (frames_dir / scene.frames[i].frame_id).string() +
                      ".json: timestamps must be strictly increasing");
    }
  }
  annotate_scene(scene);
  return scene;
}

std::vector<Scene> load_scenes(const fs::path& root) {
  if (fs::exists(root / "scene.json")) return {load_scene(root)};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "scene.json")) dirs.push_back(entry.path());
    }
  }
  if (dirs.empty()) throw Error(ErrorCode::kMissingFile, root.string() + " holds no scene.json");
  std::sort(dirs.begin(), dirs.end());
  std::vector<Scene> scenes;
  for (const auto& d : dirs) scenes.push_back(load_scene(d));
  return scenes;
}

void save_scene(const Scene& scene, const fs::path& root) {
  fs::create_directories(root / "frames");
  json sj;
  sj["video_id"] = scene.video_id;
  sj["fps"] = scene.fps;
  sj["split"] = split_name(scene.split);
  sj["objects"] = json::array();
  for (const auto& o : scene.objects) {
    json oj;
    oj["object_id"] = o.object_id;
    oj["label"] = o.label;
    if (o.material) oj["material"] = *o.material;
    if (o.color) oj["color"] = *o.color;
    if (o.shape) oj["shape"] = *o.shape;
    oj["box_world"] = box3d_to_json(o.box_world);
    sj["objects"].push_back(std::move(oj));
  }
  write_json_file(root / "scene.json", sj);

  for (const auto& f : scene.frames) {
    json fj;
    fj["timestamp"] = f.timestamp;
    fj["image"] = f.image;
    fj["intrinsics"] = intrinsics_to_json(f.intrinsics);
    fj["pose"] = f.pose.to_row_major();
    write_json_file(root / "frames" / (f.frame_id + ".json"), fj);
    for (const auto& [src, depth] : f.depth) {
      write_cavd(root / "frames" / (f.frame_id + "." + std::string(depth_source_name(src)) + ".cavd"),
                 depth);
    }
  }
}

Scene subsample_frames(const Scene& scene, double target_fps) {
  if (!(target_fps > 0)) throw Error(ErrorCode::kInvalidArgument, "target fps must be positive");
  if (target_fps > scene.fps * (1.0 + 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "target fps exceeds the native frame rate");
  }
  const double spacing = 1.0 / target_fps;
  // Tolerates timestamps stored as i / fps with rounding.
  const double slack = 1e-6 / scene.fps;
  Scene out = scene;
  out.frames.clear();
  std::optional<double> last;
  for (const auto& f : scene.frames) {
    if (!last || f.timestamp - *last >= spacing - slack) {
      out.frames.push_back(f);
      last = f.timestamp;
    }
  }
  return out;
}

std::vector<VisibleObject> compute_visibility(const Scene& scene, const Frame& frame) {
  std::vector<VisibleObject> out;
  const CameraIntrinsics& k = frame.intrinsics;
  for (const auto& obj : scene.objects) {
    OrientedBox3D cam = transform_box(obj.box_world, frame.pose);
    const auto corners = cam.corners();
    if (std::none_of(corners.begin(), corners.end(), [](const Vec3& c) { return c.z() > 0; })) {
      continue;
    }
    Box2D hull;
    try {
      hull = project_box_to_2d(cam, k, /*clip=*/false);
    } catch (const Error&) {
      continue;
    }
    if (!(hull.x_min < k.width && hull.x_max > 0 && hull.y_min < k.height && hull.y_max > 0)) {
      continue;
    }
    out.push_back({obj.object_id, cam, project_box_to_2d(cam, k, /*clip=*/true)});
  }
  return out;
}

std::vector<std::string> select_support_frames(const Scene& scene, const Frame& ref, int max_n) {
  std::vector<std::string> picked;
  auto it = std::find_if(scene.frames.begin(), scene.frames.end(),
                         [&](const Frame& f) { return f.frame_id == ref.frame_id; });
  if (it == scene.frames.end()) {
    throw Error(ErrorCode::kInvalidArgument, "frame '" + ref.frame_id + "' is not in the scene");
  }
  const double trigger = kSupportRotationTrigger * std::numbers::pi / 180.0;
  const RigidPose* key = &it->pose;
  for (auto back = std::make_reverse_iterator(it);
       back != scene.frames.rend() && static_cast<int>(picked.size()) < max_n; ++back) {
    const double angle = rotation_angle(key->rotation(), back->pose.rotation());
    const double moved = (key->translation() - back->pose.translation()).norm();
    if (angle >= trigger || moved >= kSupportTranslationTrigger) {
      picked.push_back(back->frame_id);
      key = &back->pose;
    }
  }
  std::reverse(picked.begin(), picked.end());
  return picked;
}

RigidPose relative_pose(const Frame& ref, const Frame& support) {
  return ref.pose.inverse() * support.pose;
}

void annotate_scene(Scene& scene) {
  for (auto& f : scene.frames) {
    f.visible_objects = compute_visibility(scene, f);
    f.support_frames = select_support_frames(scene, f);
  }
}

}  // namespace svf
