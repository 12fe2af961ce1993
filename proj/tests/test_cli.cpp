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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "svf/cli.hpp"
#include "svf/eval.hpp"
#include "svf/qa.hpp"
#include "svf/rng.hpp"
#include "svf/scene.hpp"
#include "svf/synth.hpp"

using namespace svf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run svf_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "svf");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& name) : root(fs::temp_directory_path() / ("svf_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string operator/(const std::string& rel) const { return (root / rel).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Content hash per file, manifests excluded.
std::map<std::string, std::uint64_t> tree_digest(const fs::path& dir) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    out[fs::relative(e.path(), dir).string()] = StableHash().add(slurp(e.path())).value();
  }
  return out;
}

nlohmann::json manifest(const std::string& dir) { return nlohmann::json::parse(slurp(fs::path(dir) / "run_manifest.json")); }

void write_text(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST_CASE("help, version and usage errors") {
  CHECK(svf_cli({"--help"}).code == 0);
  CHECK(svf_cli({"generate", "--help"}).code == 0);
  CHECK(svf_cli({"--version"}).out.find(tool_version()) != std::string::npos);
  CHECK(svf_cli({}).code == kExitUsage);
  CHECK(svf_cli({"frobnicate"}).code == kExitUsage);
  CHECK(svf_cli({"synth", "--objects", "many"}).code == kExitUsage);
  const Run missing = svf_cli({"generate", "--scenes", "x"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("--out is required") != std::string::npos);
}

TEST_CASE("synth") {
  Scratch tmp("synth");
  const Run a = svf_cli({"synth", "--seed", "7", "--objects", "5", "--frames", "20", "--out", tmp / "a"});
  REQUIRE(a.code == 0);
  const Scene scene = load_scene(tmp / "a");
  CHECK(scene.frames.size() == 20);
  CHECK(scene.objects.size() == 5);

  REQUIRE(svf_cli({"synth", "--seed", "7", "--objects", "5", "--frames", "20", "--out", tmp / "b"}).code == 0);
  CHECK(tree_digest(tmp / "a") == tree_digest(tmp / "b"));
  auto ma = manifest(tmp / "a"), mb = manifest(tmp / "b");
  CHECK(ma["command"] == "synth");
  CHECK(ma["seed"] == 7);
  CHECK(ma["tool_version"] == tool_version());
  CHECK(ma["config_hash"].get<std::string>().size() == 16);
  ma.erase("wall_time_seconds"), mb.erase("wall_time_seconds");
  ma["config"].erase("out"), mb["config"].erase("out");
  ma.erase("outputs"), mb.erase("outputs");
  ma.erase("config_hash"), mb.erase("config_hash");
  CHECK(ma == mb);

  REQUIRE(svf_cli({"synth", "--seed", "8", "--objects", "5", "--frames", "20", "--out", tmp / "c"}).code == 0);
  CHECK(tree_digest(tmp / "a") != tree_digest(tmp / "c"));

  const Run infeasible = svf_cli({"synth", "--objects", "10000", "--room", "1", "--out", tmp / "d"});
  CHECK(infeasible.code == kExitUsage);
  CHECK(infeasible.err.find("SpecInfeasible") != std::string::npos);
}

TEST_CASE("generate with config file and flags") {
  Scratch tmp("generate");
  REQUIRE(svf_cli({"synth", "--seed", "2", "--frames", "8", "--out", tmp / "scenes/one"}).code == 0);
  REQUIRE(svf_cli({"synth", "--seed", "3", "--frames", "6", "--out", tmp / "scenes/two"}).code == 0);

  write_text(tmp / "counting.ini",
             "jobs = 2\nthreshold = 3\n\n[generate]\nseed = 5\ncategories = counting\nmax_per_category = 2\n");
  const Run counting = svf_cli({"generate", "--config", tmp / "counting.ini", "--scenes", tmp / "scenes", "--out", tmp / "c"});
  REQUIRE(counting.code == 0);
  const auto records = read_records(tmp / "c/dataset.jsonl");
  REQUIRE_FALSE(records.empty());
  std::set<std::string> videos;
  for (const auto& r : records) {
    CHECK(r.category == Category::kCounting);
    videos.insert(r.video_id);
  }
  CHECK(videos.size() == 2);
  const auto m = manifest(tmp / "c");
  CHECK(m["seed"] == 5);
  CHECK(m["config"]["jobs"] == 2);
  CHECK(m["config"]["max-per-category"] == 2);
  CHECK(m["summary"]["records"] == records.size());

  // Flags win over the file.
  REQUIRE(svf_cli({"generate", "--config", tmp / "counting.ini", "--seed", "9", "--scenes", tmp / "scenes", "--out", tmp / "d"}).code == 0);
  CHECK(manifest(tmp / "d")["seed"] == 9);
  CHECK(manifest(tmp / "d")["config_hash"] != m["config_hash"]);

  write_text(tmp / "bad.ini", "[generate]\nsede = 5\n");
  CHECK(svf_cli({"generate", "--config", tmp / "bad.ini", "--scenes", tmp / "scenes", "--out", tmp / "e"}).code == kExitUsage);
  write_text(tmp / "badval.ini", "[generate]\nseed = five\n");
  CHECK(svf_cli({"generate", "--config", tmp / "badval.ini", "--scenes", tmp / "scenes", "--out", tmp / "e"}).code == kExitUsage);
  CHECK(svf_cli({"generate", "--categories", "telepathy", "--scenes", tmp / "scenes", "--out", tmp / "e"}).code == kExitUsage);
  CHECK(svf_cli({"generate", "--scenes", tmp / "nothing", "--out", tmp / "e"}).code == kExitRuntime);

  REQUIRE(svf_cli({"generate", "--convention", "aabb", "--scenes", tmp / "scenes", "--out", tmp / "aabb"}).code == 0);
  for (const auto& r : read_records(tmp / "aabb/dataset.jsonl")) CHECK(r.convention == Convention::kAabb);

  REQUIRE(svf_cli({"generate", "--seed", "4", "--scale-aug", "--scenes", tmp / "scenes", "--out", tmp / "r1"}).code == 0);
  REQUIRE(svf_cli({"generate", "--seed", "4", "--scale-aug", "--jobs", "4", "--scenes", tmp / "scenes", "--out", tmp / "r2"}).code == 0);
  CHECK(slurp(tmp / "r1/dataset.jsonl") == slurp(tmp / "r2/dataset.jsonl"));
  CHECK(slurp(tmp / "r1/dataset.jsonl").find("/scaled") != std::string::npos);
}

TEST_CASE("filter") {
  Scratch tmp("filter");
  REQUIRE(svf_cli({"synth", "--seed", "4", "--frames", "10", "--out", tmp / "s"}).code == 0);
  REQUIRE(svf_cli({"generate", "--seed", "1", "--scenes", tmp / "s", "--out", tmp / "g"}).code == 0);
  const std::string bench = tmp / "g/dataset.jsonl";
  const std::string judges = "4*local:seeded_random:0.35,2*local:majority_class,local:always_wrong";
  ::setenv("SVF_CACHE_DIR", (tmp / "cache").c_str(), 1);

  const Run first = svf_cli({"filter", "--benchmark", bench, "--judges", judges, "--out", tmp / "f1", "--no-cache"});
  REQUIRE(first.code == 0);
  CHECK_FALSE(fs::exists(tmp / "cache"));
  const auto kept = read_records(tmp / "f1/kept.jsonl");
  const auto removed = read_records(tmp / "f1/removed.jsonl");
  CHECK(kept.size() + removed.size() == read_records(bench).size());
  CHECK_FALSE(removed.empty());
  for (const auto& r : removed) CHECK_FALSE(is_grounding(r.category));
  CHECK(manifest(tmp / "f1")["summary"]["removed"] == removed.size());

  REQUIRE(svf_cli({"filter", "--benchmark", bench, "--judges", judges, "--out", tmp / "f2", "--jobs", "4"}).code == 0);
  CHECK(tree_digest(tmp / "f1").at("kept.jsonl") == tree_digest(tmp / "f2").at("kept.jsonl"));
  CHECK(tree_digest(tmp / "f1").at("removed.jsonl") == tree_digest(tmp / "f2").at("removed.jsonl"));

  // Interrupt: keep the first third of the cache and tear the next line.
  std::vector<fs::path> caches(fs::directory_iterator(tmp / "cache"), fs::directory_iterator{});
  REQUIRE(caches.size() == 1);
  std::string log = slurp(caches[0]);
  std::size_t cut = 0;
  for (int i = 0, lines = static_cast<int>(std::count(log.begin(), log.end(), '\n')) / 3; i < lines; ++i) {
    cut = log.find('\n', cut) + 1;
  }
  write_text(caches[0].string(), log.substr(0, cut + 20));
  REQUIRE(svf_cli({"filter", "--benchmark", bench, "--judges", judges, "--out", tmp / "f3"}).code == 0);
  CHECK(slurp(tmp / "f3/kept.jsonl") == slurp(tmp / "f1/kept.jsonl"));
  CHECK(slurp(tmp / "f3/removed.jsonl") == slurp(tmp / "f1/removed.jsonl"));

  const Run over = svf_cli({"filter", "--benchmark", bench, "--judges", "7*local:always_correct", "--threshold", "8", "--out", tmp / "x"});
  CHECK(over.code == kExitUsage);
  CHECK_FALSE(fs::exists(tmp / "x"));
  CHECK(svf_cli({"filter", "--benchmark", bench, "--judges", "local:oracle", "--threshold", "1", "--out", tmp / "x"}).code == kExitUsage);

  // An unreachable HTTP judge leaves its records kept and flagged.
  const Run down = svf_cli({"filter", "--benchmark", bench, "--judges", "2*local:always_correct,http:http://127.0.0.1:9/judge",
                            "--threshold", "2", "--timeout", "0.2", "--no-cache", "--out", tmp / "down"});
  CHECK(down.code == kExitRuntime);
  CHECK(down.err.find("PanelIncomplete") != std::string::npos);
  CHECK(read_records(tmp / "down/removed.jsonl").empty());
  ::unsetenv("SVF_CACHE_DIR");
}

TEST_CASE("eval") {
  Scratch tmp("eval");
  REQUIRE(svf_cli({"synth", "--seed", "5", "--frames", "6", "--out", tmp / "s"}).code == 0);
  REQUIRE(svf_cli({"generate", "--seed", "1", "--scenes", tmp / "s", "--out", tmp / "g"}).code == 0);
  const auto records = read_records(tmp / "g/dataset.jsonl");
  std::vector<Prediction> oracle;
  for (const auto& r : records) oracle.push_back(oracle_prediction(r));
  write_predictions(tmp / "oracle.jsonl", oracle);

  const Run run = svf_cli({"eval", "--benchmark", tmp / "g/dataset.jsonl", "--predictions", tmp / "oracle.jsonl",
                           "--report", tmp / "report", "--scenes", tmp / "s"});
  REQUIRE(run.code == 0);
  const auto report = nlohmann::json::parse(slurp(tmp / "report/report.json"));
  CHECK(report["average"] == 100.0);
  for (const auto& c : report["categories"]) CHECK(c["value"] == 100.0);
  CHECK(fs::exists(tmp / "report/report.txt"));
  CHECK(slurp(tmp / "report/report.txt") == run.out);
  CHECK(manifest(tmp / "report")["command"] == "eval");

  std::string lines = slurp(tmp / "oracle.jsonl");
  const std::size_t second = lines.find('\n', lines.find('\n') + 1) + 1;
  lines.insert(second, "{\"record_id\": 12\n");
  write_text(tmp / "broken.jsonl", lines);
  const Run broken = svf_cli({"eval", "--benchmark", tmp / "g/dataset.jsonl", "--predictions", tmp / "broken.jsonl",
                              "--report", tmp / "report2"});
  CHECK(broken.code == kExitRuntime);
  CHECK(broken.err.find("broken.jsonl:3") != std::string::npos);
}

TEST_CASE("depth-serve over stdio") {
  Scratch tmp("serve");
  REQUIRE(svf_cli({"synth", "--seed", "6", "--frames", "3", "--out", tmp / "s"}).code == 0);
  const Scene scene = load_scene(tmp / "s");
  const Frame& f = scene.frames[1];
  std::vector<double> zs;
  for (int v = 90; v <= 130; ++v) {
    for (int u = 50; u <= 100; ++u) {
      if (auto z = ray_cast_depth(scene.objects, f.pose, f.intrinsics, u, v)) zs.push_back(static_cast<float>(*z));
    }
  }
  REQUIRE(zs.size() > 100);
  std::sort(zs.begin(), zs.end());
  const double analytic = zs.size() % 2 ? zs[zs.size() / 2] : 0.5 * (zs[zs.size() / 2 - 1] + zs[zs.size() / 2]);

  std::istringstream in(
      R"({"op": "open_session", "frame_id": "nope"})"
      "\n"
      R"({"op": "open_session", "frame_id": ")" + f.frame_id + R"("})"
      "\n"
      R"({"op": "call", "session_id": "s1", "label": "thing", "box": [50, 90, 100, 130]})"
      "\n"
      R"({"op": "close", "session_id": "s1"})"
      "\n");
  auto* saved = std::cin.rdbuf(in.rdbuf());
  const Run run = svf_cli({"depth-serve", "--scenes", tmp / "s"});
  std::cin.rdbuf(saved);
  REQUIRE(run.code == 0);
  std::istringstream lines(run.out);
  std::vector<nlohmann::json> responses;
  for (std::string line; std::getline(lines, line);) responses.push_back(nlohmann::json::parse(line));
  REQUIRE(responses.size() == 4);
  CHECK(responses[0]["code"] == "UnknownFrame");
  CHECK(responses[1]["session_id"] == "s1");
  CHECK(responses[2]["depth_m"].get<double>() == doctest::Approx(analytic).epsilon(1e-9));
  CHECK(responses[3]["closed"] == true);

  CHECK(svf_cli({"depth-serve", "--scenes", tmp / "s", "--listen", "nowhere"}).code == kExitUsage);
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.command = "generate";
  m.config = {{"seed", 3}};
  m.config_hash = "00000000000000ff";
  m.seed = 3;
  m.inputs = {"a"};
  m.outputs = {"b", "c"};
  m.tool_version = tool_version();
  m.wall_time_seconds = 1.5;
  m.summary = {{"records", 10}};
  CHECK(manifest_to_json(manifest_from_json(manifest_to_json(m))) == manifest_to_json(m));
}
