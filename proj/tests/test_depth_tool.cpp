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
#include <sstream>
#include <thread>

#include "svf/depth_tool.hpp"
#include "svf/error.hpp"
#include "svf/qa.hpp"
#include "svf/synth.hpp"

#include <httplib.h>

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

// Depth 2.0 everywhere except a 3x3 patch holding 1..9 at u, v in [10, 12].
DepthMap patch_depth() {
  DepthMap depth(64, 48, 2.0f);
  for (int v = 10; v <= 12; ++v) {
    for (int u = 10; u <= 12; ++u) depth.at(u, v) = static_cast<float>(1 + (v - 10) * 3 + (u - 10));
  }
  for (int v = 30; v < 40; ++v) {
    for (int u = 30; u < 40; ++u) depth.at(u, v) = 0.0f;
  }
  return depth;
}

ToolSession session_with(DepthMap depth) {
  ToolSession s;
  s.session_id = "t";
  s.frame_id = "f0";
  s.depth = std::move(depth);
  return s;
}

// Replays fixed chunks, ignoring the transcript.
struct ScriptedModel {
  std::vector<std::string> chunks;
  std::size_t next = 0;
  std::vector<std::string> seen;
  std::string operator()(const std::string& transcript) {
    seen.push_back(transcript);
    return next < chunks.size() ? chunks[next++] : std::string();
  }
};

GenerationCallback callback(ScriptedModel& m) {
  return [&m](const std::string& t) { return m(t); };
}

double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Scene service_scene() {
  Scene scene;
  scene.video_id = "vid";
  Frame f{.frame_id = "f0", .intrinsics = CameraIntrinsics(50, 50, 32, 24, 64, 48)};
  f.depth[DepthSource::kGroundTruth] = patch_depth();
  f.depth[DepthSource::kMonocular] = DepthMap(64, 48, 3.5f);
  scene.frames.push_back(f);
  f.frame_id = "f1";
  f.depth[DepthSource::kGroundTruth] = DepthMap(64, 48, 1.25f);
  scene.frames.push_back(f);
  return scene;
}

}  // namespace

TEST_CASE("parse_tool_call grammar") {
  const auto call = parse_tool_call("Depth(chair, [10, 20, 110, 220]) ->");
  REQUIRE(call);
  CHECK(call->label == "chair");
  CHECK(call->box == Box2D(10, 20, 110, 220));
  CHECK(call->span_begin == 0);
  CHECK(call->span_end == 35);

  const std::string prefix = "Let me check.\nDepth(coffee table,[1,2 ,3, 4.5])->  \n";
  const auto spaced = parse_tool_call(prefix);
  REQUIRE(spaced);
  CHECK(spaced->label == "coffee table");
  CHECK(spaced->box == Box2D(1, 2, 3, 4.5));
  CHECK(prefix.substr(spaced->span_begin, spaced->span_end - spaced->span_begin) == "Depth(coffee table,[1,2 ,3, 4.5])->");

  CHECK_FALSE(parse_tool_call("The chair is closer."));
  CHECK_FALSE(parse_tool_call("Depth(chair, [1, 2, 3, 4]) -> 2.00m"));  // already answered
  CHECK_FALSE(parse_tool_call("Depth(chair, [1, 2, 3, 4])"));           // arrow not emitted yet
  CHECK_FALSE(parse_tool_call("depth(chair, [1, 2, 3, 4]) ->"));       // case is fixed
  CHECK_FALSE(parse_tool_call("Depth(chair, [1, 2, 3, 4]) => "));

  CHECK(code_of([] { parse_tool_call("Depth(chair, [10, 20]) ->"); }) == ErrorCode::kMalformedCall);
  CHECK(code_of([] { parse_tool_call("Depth(chair, [a, b, c, d]) ->"); }) == ErrorCode::kMalformedCall);
  CHECK(code_of([] { parse_tool_call("Depth(chair, [5, 5, 1, 1]) ->"); }) == ErrorCode::kMalformedCall);
  CHECK(code_of([] { parse_tool_call("Depth( , [1, 2, 3, 4]) ->"); }) == ErrorCode::kMalformedCall);
}

TEST_CASE("answer_call") {
  ToolSession uniform = session_with(DepthMap(64, 48, 2.0f));
  CHECK(answer_call(uniform, {"x", Box2D(0, 0, 63, 47)}) == 2.0);

  ToolSession s = session_with(patch_depth());
  CHECK(answer_call(s, {"x", Box2D(10, 10, 12, 12)}) == 5.0);
  // Clamped to the image: only pixel (63, 47) remains.
  CHECK(answer_call(s, {"x", Box2D(63, 47, 500, 500)}) == 2.0);
  CHECK(code_of([&] { answer_call(s, {"x", Box2D(100, 100, 120, 120)}); }) == ErrorCode::kEmptyDepthRegion);
  CHECK(code_of([&] { answer_call(s, {"x", Box2D(31, 31, 38, 38)}); }) == ErrorCode::kEmptyDepthRegion);
  REQUIRE(s.log.size() == 4);
  CHECK(s.log[0].meters == 5.0);
  CHECK_FALSE(s.log[2].meters);

  CHECK(splice_text(2.0) == "2.00m");
  CHECK(splice_text(2.345) == "2.35m");
  CHECK(splice_text(std::nullopt) == "unknown");
}

TEST_CASE("run_tool_loop") {
  SUBCASE("two calls then an answer") {
    ToolSession s = session_with(patch_depth());
    ScriptedModel m{{"Depth(chair, [10, 10, 12, 12]) ->", "\nDepth(table, [30, 30, 35, 35]) ->",
                     "\nDepth(lamp, [0, 0, 1, 1]) ->", "\nAnswer: no"}};
    const ToolTranscript t = run_tool_loop(callback(m), s);
    CHECK(t.text() ==
          "Depth(chair, [10, 10, 12, 12]) -> 5.00m\n"
          "Depth(table, [30, 30, 35, 35]) -> unknown\n"
          "Depth(lamp, [0, 0, 1, 1]) -> 2.00m\n"
          "Answer: no");
    CHECK(t.calls.size() == 3);
    CHECK(s.log.size() == 3);
    std::string raw;
    for (const auto& c : m.chunks) raw += c;
    CHECK(t.raw_emission() == raw);
    // The model sees each splice before continuing.
    CHECK(m.seen[1] == "Depth(chair, [10, 10, 12, 12]) -> 5.00m");
    CHECK(m.seen.size() == 4);
  }
  SUBCASE("no calls pass through") {
    ToolSession s = session_with(patch_depth());
    ScriptedModel m{{"It is a chair.\n", "Answer: yes"}};
    const ToolTranscript t = run_tool_loop(callback(m), s);
    CHECK(t.text() == "It is a chair.\nAnswer: yes");
    CHECK(t.calls.empty());
    CHECK(t.segments.size() == 2);
  }
  SUBCASE("a model that stops early ends the loop") {
    ToolSession s = session_with(patch_depth());
    ScriptedModel m{{"Depth(a, [0, 0, 1, 1]) -> "}};
    const ToolTranscript t = run_tool_loop(callback(m), s);
    CHECK(t.text() == "Depth(a, [0, 0, 1, 1]) -> 2.00m");
  }
  SUBCASE("call budget") {
    ScriptedModel eight, nine;
    for (int i = 0; i < 9; ++i) {
      const std::string chunk = "Depth(x, [0, 0, 1, 1]) ->\n";
      if (i < 8) eight.chunks.push_back(chunk);
      nine.chunks.push_back(chunk);
    }
    eight.chunks.push_back("Answer: 2.00m");
    nine.chunks.push_back("Answer: 2.00m");
    ToolSession a = session_with(patch_depth());
    CHECK(run_tool_loop(callback(eight), a).calls.size() == 8);
    ToolSession b = session_with(patch_depth());
    CHECK(code_of([&] { run_tool_loop(callback(nine), b); }) == ErrorCode::kCallBudgetExceeded);
    ToolSession c = session_with(patch_depth());
    eight.next = 0;
    CHECK(code_of([&] { run_tool_loop(callback(eight), c, 2); }) == ErrorCode::kCallBudgetExceeded);
  }
}

TEST_CASE("tool loop reproduces CoT medians across modules") {
  SynthSpec spec;
  spec.num_frames = 8;
  GenerationConfig config;
  config.seed = 11;
  config.vocabulary = default_vocabulary();
  const Scene scene = generate_synthetic_scene(11, spec);
  int checked = 0;
  for (DepthSource source : {DepthSource::kGroundTruth, DepthSource::kArkit, DepthSource::kMonocular}) {
    config.depth_source_for_cot = source;
    for (const QARecord& r : generate_dataset({scene}, config)) {
      if (r.cot_steps.empty()) continue;
      ToolSession s = session_with(*scene.find_frame(r.frame_id)->depth_map(source));
      ScriptedModel m;
      for (std::size_t i = 0; i < r.cot_steps.size(); ++i) {
        m.chunks.push_back((i ? "\n" : "") + format_depth_call(r.cot_steps[i].label, r.cot_steps[i].box) + " ->");
      }
      m.chunks.push_back("\nAnswer: " + answer_text(r));
      const ToolTranscript t = run_tool_loop(callback(m), s);
      REQUIRE(t.calls.size() == r.cot_steps.size());
      for (std::size_t i = 0; i < r.cot_steps.size(); ++i) CHECK(t.calls[i].meters == r.cot_steps[i].depth);
      CHECK(t.text() == cot_text(r));
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("depth service protocol") {
  DepthService service({service_scene()});
  const auto open = service.handle({{"op", "open_session"}, {"frame_id", "f0"}, {"depth_source", "gt"}});
  REQUIRE(open.contains("session_id"));
  const std::string id = open["session_id"];
  auto r = service.handle({{"op", "call"}, {"session_id", id}, {"label", "chair"}, {"box", {10, 10, 12, 12}}});
  CHECK(r.at("depth_m") == 5.0);
  r = service.handle({{"op", "call"}, {"session_id", id}, {"label", "hole"}, {"box", {31, 31, 38, 38}}});
  CHECK(r.at("code") == "EmptyDepthRegion");
  r = service.handle({{"op", "call"}, {"session_id", id}, {"label", "x"}, {"box", {1, 2}}});
  CHECK(r.at("code") == "MalformedCall");
  r = service.handle({{"op", "call"}, {"session_id", id}, {"box", {1, 2, 3, 4}}});
  CHECK(r.at("code") == "SchemaViolation");

  const auto mono = service.handle({{"op", "open_session"}, {"frame_id", "f0"}, {"depth_source", "mono"}});
  CHECK(service.handle({{"op", "call"}, {"session_id", mono["session_id"]}, {"label", "x"}, {"box", {10, 10, 12, 12}}})
            .at("depth_m") == 3.5);

  CHECK(service.handle({{"op", "open_session"}, {"frame_id", "nope"}}).at("code") == "UnknownFrame");
  CHECK(service.handle({{"op", "open_session"}, {"frame_id", "f1"}, {"depth_source", "arkit"}}).at("code") ==
        "MissingFile");
  CHECK(service.handle({{"op", "open_session"}, {"frame_id", "f0"}, {"video_id", "other"}}).at("code") ==
        "UnknownFrame");
  CHECK(service.handle({{"op", "warp"}}).at("code") == "InvalidArgument");

  CHECK(service.open_sessions() == 2);
  CHECK(service.handle({{"op", "close"}, {"session_id", id}}).at("closed") == true);
  CHECK(service.handle({{"op", "call"}, {"session_id", id}, {"label", "x"}, {"box", {0, 0, 1, 1}}}).at("code") ==
        "UnknownSession");
  CHECK(service.handle({{"op", "close"}, {"session_id", id}}).at("code") == "UnknownSession");
  CHECK(service.open_sessions() == 1);
}

TEST_CASE("depth service stream transport") {
  DepthService service({service_scene()});
  std::istringstream in(
      R"({"op": "open_session", "frame_id": "f1"})"
      "\nnot json\n\n"
      R"({"op": "call", "session_id": "s1", "label": "x", "box": [0, 0, 5, 5]})"
      "\n"
      R"({"op": "close", "session_id": "s1"})"
      "\n");
  std::ostringstream out;
  service.serve_stream(in, out);
  std::istringstream lines(out.str());
  std::vector<nlohmann::json> responses;
  for (std::string line; std::getline(lines, line);) responses.push_back(nlohmann::json::parse(line));
  REQUIRE(responses.size() == 4);
  CHECK(responses[0].at("session_id") == "s1");
  CHECK(responses[1].at("code") == "SchemaViolation");
  CHECK(responses[2].at("depth_m") == 1.25);
  CHECK(responses[3].at("closed") == true);
}

TEST_CASE("depth service over HTTP against a synthetic scene") {
  SynthSpec spec;
  spec.num_frames = 4;
  const Scene scene = generate_synthetic_scene(3, spec);
  DepthService service({scene});
  DepthHttpServer server(service);
  const int port = server.start("127.0.0.1", 0);

  auto rpc = [port](const nlohmann::json& body) {
    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/rpc", body.dump(), "application/json");
    REQUIRE(res);
    return nlohmann::json::parse(res->body);
  };

  // Analytic oracle: ray-cast every pixel of the box and take the median.
  std::vector<double> medians(scene.frames.size());
  const Box2D box(40, 30, 90, 80);
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    const Frame& f = scene.frames[i];
    std::vector<double> zs;
    for (int v = 30; v <= 80; ++v) {
      for (int u = 40; u <= 90; ++u) {
        if (auto z = ray_cast_depth(scene.objects, f.pose, f.intrinsics, u, v)) {
          zs.push_back(static_cast<double>(static_cast<float>(*z)));
        }
      }
    }
    medians[i] = sorted_median(zs);
  }

  // Concurrent sessions on distinct frames.
  std::vector<double> got(scene.frames.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    threads.emplace_back([&, i] {
      const auto open = rpc({{"op", "open_session"}, {"frame_id", scene.frames[i].frame_id}});
      const auto call = rpc({{"op", "call"}, {"session_id", open.at("session_id")}, {"label", "thing"},
                             {"box", {box.x_min, box.y_min, box.x_max, box.y_max}}});
      got[i] = call.at("depth_m").get<double>();
      rpc({{"op", "close"}, {"session_id", open.at("session_id")}});
    });
  }
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(medians[i]).epsilon(1e-6));
  CHECK(got.front() != got.back());

  CHECK(rpc({{"op", "open_session"}, {"frame_id", "missing"}}).at("code") == "UnknownFrame");
  CHECK(rpc({{"op", "open_session"}, {"frame_id", scene.frames[0].frame_id}}).contains("session_id"));
  server.stop();
}
