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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "svf/error.hpp"
#include "svf/scene.hpp"
#include "svf/synth.hpp"

using namespace svf;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const CameraIntrinsics kIntrinsics(100, 100, 50, 50, 100, 100);

Frame make_frame(int i, double timestamp, const RigidPose& pose) {
  return Frame{.frame_id = "f" + std::to_string(1000 + i),
               .timestamp = timestamp,
               .image = "",
               .intrinsics = kIntrinsics,
               .pose = pose};
}

Scene video(int n, double fps) {
  Scene s;
  s.video_id = "v";
  s.fps = fps;
  for (int i = 0; i < n; ++i) s.frames.push_back(make_frame(i, i / fps, RigidPose()));
  return s;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("svf_test_scene_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("subsample_frames") {
  const Scene s = video(300, 30.0);
  const Scene one = subsample_frames(s, 1.0);
  REQUIRE(one.frames.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(one.frames[i].frame_id == s.frames[30 * i].frame_id);

  CHECK(subsample_frames(video(1800, 30.0), 0.1).frames.size() == 6);
  CHECK(subsample_frames(s, 30.0).frames.size() == 300);
  CHECK(subsample_frames(one, 1.0).frames.size() == one.frames.size());
  CHECK_THROWS_AS(subsample_frames(s, 0.0), Error);
}

TEST_CASE("compute_visibility") {
  Scene s = video(1, 30.0);
  auto add = [&](const std::string& id, const Vec3& c) {
    s.objects.push_back({.object_id = id, .label = "box", .box_world = OrientedBox3D(c, Vec3(1, 1, 1), 0.2)});
  };
  add("front", Vec3(0, 0, 4));
  add("behind", Vec3(0, 0, -4));
  add("edge", Vec3(2.2, 0, 4));  // hull straddles the right image border
  add("outside", Vec3(30, 0, 4));
  const auto vis = compute_visibility(s, s.frames[0]);
  std::vector<std::string> ids;
  for (const auto& v : vis) ids.push_back(v.object_id);
  CHECK(ids == std::vector<std::string>{"front", "edge"});
  for (const auto& v : vis) {
    CHECK(v.box2d.x_min >= 0);
    CHECK(v.box2d.x_max <= 100);
  }
}

TEST_CASE("visibility agrees with brute-force corner projection on synthetic scenes") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scene s = generate_synthetic_scene(seed, SynthSpec{});
    for (const Frame& f : s.frames) {
      std::vector<std::string> expect;
      for (const auto& o : s.objects) {
        double x0 = 1e18, x1 = -1e18, y0 = 1e18, y1 = -1e18;
        bool any = false;
        for (const Vec3& c : o.box_world.corners()) {
          const Vec3 p = f.pose.rotation().transpose() * (c - f.pose.translation());
          if (p.z() <= 1e-6) continue;
          any = true;
          const double u = f.intrinsics.fx * p.x() / p.z() + f.intrinsics.cx;
          const double v = f.intrinsics.fy * p.y() / p.z() + f.intrinsics.cy;
          x0 = std::min(x0, u), x1 = std::max(x1, u), y0 = std::min(y0, v), y1 = std::max(y1, v);
        }
        if (any && x0 < f.intrinsics.width && x1 > 0 && y0 < f.intrinsics.height && y1 > 0) {
          expect.push_back(o.object_id);
        }
      }
      std::vector<std::string> got;
      for (const auto& v : f.visible_objects) got.push_back(v.object_id);
      CHECK(got == expect);
    }
  }
}

TEST_CASE("select_support_frames") {
  SUBCASE("stationary camera") {
    Scene s = video(10, 1.0);
    CHECK(select_support_frames(s, s.frames.back()).empty());
  }
  SUBCASE("10 degrees per frame triggers every 20 degrees") {
    Scene s;
    s.fps = 1.0;
    for (int i = 0; i < 6; ++i) s.frames.push_back(make_frame(i, i, RigidPose::from_yaw(10.0 * i * kDeg, Vec3::Zero())));
    const auto picked = select_support_frames(s, s.frames[5]);
    // Backwards from frame 5: frame 3 (20 deg), then frame 1 (20 deg from 3).
    CHECK(picked == std::vector<std::string>{s.frames[1].frame_id, s.frames[3].frame_id});
  }
  SUBCASE("cap at max_n") {
    Scene s;
    s.fps = 1.0;
    for (int i = 0; i < 7; ++i) s.frames.push_back(make_frame(i, i, RigidPose(Mat3::Identity(), Vec3(0.5 * i, 0, 0))));
    const auto picked = select_support_frames(s, s.frames[6]);
    REQUIRE(picked.size() == 4);
    CHECK(picked.front() == s.frames[2].frame_id);
    CHECK(picked.back() == s.frames[5].frame_id);
  }
  SUBCASE("random trajectories agree with the walk oracle") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> step_angle(0.0, 9.0), step_move(0.0, 0.18), axis(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
      Scene s;
      s.fps = 1.0;
      Mat3 r = Mat3::Identity();
      Vec3 t = Vec3::Zero();
      for (int i = 0; i < 25; ++i) {
        s.frames.push_back(make_frame(i, i, RigidPose(r, t)));
        const Vec3 ax = Vec3(axis(gen), axis(gen), axis(gen)).normalized();
        r = r * Eigen::AngleAxisd(step_angle(gen) * kDeg, ax).toRotationMatrix();
        t += step_move(gen) * Vec3(axis(gen), axis(gen), axis(gen)).normalized();
      }
      for (std::size_t ref = 0; ref < s.frames.size(); ++ref) {
        const auto picked = select_support_frames(s, s.frames[ref]);
        CHECK(picked.size() <= 4);
        CHECK(picked == oracle::walk_support_frames(s, ref, 4));
      }
    }
  }
}

TEST_CASE("relative_pose") {
  const Frame a = make_frame(0, 0, RigidPose());
  CHECK(relative_pose(a, a).rotation().isApprox(Mat3::Identity()));
  CHECK(relative_pose(a, a).translation().norm() < 1e-15);

  const Frame b = make_frame(1, 1, RigidPose(Mat3::Identity(), Vec3(1, 0, 0)));
  // Support camera origin seen from the reference camera.
  CHECK(relative_pose(a, b).translation().isApprox(Vec3(1, 0, 0)));

  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rnd = [&] {
    const Eigen::Quaterniond q = Eigen::Quaterniond(u(gen), u(gen), u(gen), u(gen)).normalized();
    return RigidPose(q.toRotationMatrix(), Vec3(u(gen), u(gen), u(gen)));
  };
  for (int i = 0; i < 50; ++i) {
    const Frame fa = make_frame(0, 0, rnd()), fb = make_frame(1, 1, rnd()), fc = make_frame(2, 2, rnd());
    const RigidPose direct = relative_pose(fa, fc);
    const RigidPose chained = relative_pose(fa, fb) * relative_pose(fb, fc);
    CHECK((direct.rotation() - chained.rotation()).norm() < 1e-9);
    CHECK((direct.translation() - chained.translation()).norm() < 1e-9);
    // Homogeneous-matrix cross check.
    Eigen::Matrix4d ma = Eigen::Matrix4d::Identity(), mc = Eigen::Matrix4d::Identity();
    ma.block<3, 3>(0, 0) = fa.pose.rotation();
    ma.block<3, 1>(0, 3) = fa.pose.translation();
    mc.block<3, 3>(0, 0) = fc.pose.rotation();
    mc.block<3, 1>(0, 3) = fc.pose.translation();
    const Eigen::Matrix4d rel = ma.inverse() * mc;
    CHECK((rel.block<3, 1>(0, 3) - direct.translation()).norm() < 1e-9);
  }
}

TEST_CASE("synthetic scenes") {
  SUBCASE("deterministic bytes") {
    const fs::path a = temp_dir("synth_a"), b = temp_dir("synth_b");
    save_scene(generate_synthetic_scene(42, SynthSpec{}), a);
    save_scene(generate_synthetic_scene(42, SynthSpec{}), b);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      CHECK(slurp(entry.path()) == slurp(b / fs::relative(entry.path(), a)));
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
  SUBCASE("rendered depth equals an analytic ray cast") {
    const Scene s = generate_synthetic_scene(5, SynthSpec{});
    const Frame& f = s.frames[3];
    const DepthMap& gt = f.depth.at(DepthSource::kGroundTruth);
    int box_hits = 0;
    for (int v = 0; v < f.intrinsics.height; v += 3) {
      for (int u = 0; u < f.intrinsics.width; u += 3) {
        const Vec3 d = f.pose.rotation() * Vec3((u - f.intrinsics.cx) / f.intrinsics.fx,
                                                (v - f.intrinsics.cy) / f.intrinsics.fy, 1.0);
        const Vec3 o = f.pose.translation();
        std::optional<double> best;
        bool on_box = false;
        if (d.y() > 0) best = -o.y() / d.y();
        for (const auto& obj : s.objects) {
          const auto t = oracle::ray_hit(oracle::plain(obj.box_world), o, d);
          if (t && (!best || *t < *best)) best = t, on_box = true;
        }
        if (!best) {
          CHECK_FALSE(DepthMap::is_valid(gt.at(u, v)));
          continue;
        }
        box_hits += on_box;
        CHECK(std::abs(gt.at(u, v) - *best) <= 1e-6 * *best);
      }
    }
    CHECK(box_hits > 50);
  }
  SUBCASE("zero objects leaves only the floor") {
    SynthSpec spec;
    spec.num_objects = 0;
    const Scene s = generate_synthetic_scene(1, spec);
    CHECK(s.objects.empty());
    const Frame& f = s.frames[0];
    // Bottom row looks down at the floor, top row looks above the horizon.
    CHECK(DepthMap::is_valid(f.depth.at(DepthSource::kGroundTruth).at(10, f.intrinsics.height - 1)));
    CHECK_FALSE(DepthMap::is_valid(f.depth.at(DepthSource::kGroundTruth).at(10, 0)));
  }
  SUBCASE("infeasible packing") {
    SynthSpec spec;
    spec.num_objects = 200;
    spec.room_half_extent = 1.5;
    try {
      generate_synthetic_scene(1, spec);
      FAIL("expected SpecInfeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSpecInfeasible);
    }
  }
  SUBCASE("boxes do not overlap") {
    const Scene s = generate_synthetic_scene(9, SynthSpec{});
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      for (std::size_t j = i + 1; j < s.objects.size(); ++j) {
        CHECK(iou_3d_yaw(s.objects[i].box_world, s.objects[j].box_world) == 0.0);
      }
    }
  }
}

TEST_CASE("scene directory round trip") {
  const Scene s = generate_synthetic_scene(3, SynthSpec{.num_objects = 5, .num_frames = 6});
  const fs::path dir = temp_dir("roundtrip");
  save_scene(s, dir);
  const Scene t = load_scene(dir);
  CHECK(t.video_id == s.video_id);
  CHECK(t.fps == s.fps);
  REQUIRE(t.objects.size() == s.objects.size());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    CHECK(t.objects[i].object_id == s.objects[i].object_id);
    CHECK(t.objects[i].label == s.objects[i].label);
    CHECK(t.objects[i].material == s.objects[i].material);
    CHECK((t.objects[i].box_world.center() - s.objects[i].box_world.center()).norm() < 1e-6);
    CHECK(t.objects[i].box_world.yaw() == Approx(s.objects[i].box_world.yaw()).epsilon(1e-9));
  }
  REQUIRE(t.frames.size() == s.frames.size());
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    CHECK(t.frames[i].frame_id == s.frames[i].frame_id);
    CHECK(t.frames[i].timestamp == Approx(s.frames[i].timestamp));
    CHECK(t.frames[i].intrinsics == s.frames[i].intrinsics);
    CHECK((t.frames[i].pose.rotation() - s.frames[i].pose.rotation()).norm() < 1e-6);
    CHECK(t.frames[i].depth == s.frames[i].depth);
    CHECK(t.frames[i].support_frames == s.frames[i].support_frames);
    CHECK(t.frames[i].visible_objects.size() == s.frames[i].visible_objects.size());
  }
  fs::remove_all(dir);
}

TEST_CASE("load_scene errors") {
  const fs::path dir = temp_dir("errors");
  fs::create_directories(dir / "frames");
  std::ofstream(dir / "scene.json") << R"({"video_id":"v1","fps":30,"split":"eval","extra":1,
    "objects":[{"object_id":"o1","label":"chair","box_world":{"center":[0,-0.5,3],"dims":[1,1,1],"yaw":0}}]})";
  std::ofstream(dir / "frames" / "a.json") << R"({"timestamp":0.0,
    "intrinsics":{"fx":100,"fy":100,"cx":50,"cy":40,"width":100,"height":80},
    "pose":[1,0,0,0, 0,1,0,0, 0,0,1,0]})";

  SUBCASE("minimal scene") {
    const Scene s = load_scene(dir);
    CHECK(s.split == Split::kEval);
    REQUIRE(s.frames.size() == 1);
    CHECK(s.frames[0].frame_id == "a");
    REQUIRE(s.frames[0].visible_objects.size() == 1);
    CHECK(s.frames[0].visible_objects[0].object_id == "o1");
  }
  SUBCASE("depth with wrong dimensions") {
    write_cavd(dir / "frames" / "a.gt.cavd", DepthMap(10, 10, 1.0f));
    try {
      load_scene(dir);
      FAIL("expected IntrinsicsMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIntrinsicsMismatch);
    }
  }
  SUBCASE("schema violation names the file") {
    std::ofstream(dir / "frames" / "b.json") << R"({"timestamp":1.0, "pose":[1,0,0]})";
    try {
      load_scene(dir);
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemaViolation);
      CHECK(std::string(e.what()).find("b.json") != std::string::npos);
    }
  }
  SUBCASE("missing scene.json") {
    fs::remove(dir / "scene.json");
    try {
      load_scene(dir);
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingFile);
    }
  }
  fs::remove_all(dir);
}
