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

#include "svf/cli.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "svf/blind_filter.hpp"
#include "svf/depth_tool.hpp"
#include "svf/error.hpp"
#include "svf/eval.hpp"
#include "svf/qa.hpp"
#include "svf/rng.hpp"
#include "svf/scene.hpp"
#include "svf/strings.hpp"
#include "svf/synth.hpp"

#ifndef SVF_VERSION
#define SVF_VERSION "0.0.0"
#endif

namespace svf {

namespace fs = std::filesystem;
using nlohmann::json;

const char* tool_version() { return SVF_VERSION; }

json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command},           {"config", m.config},   {"config_hash", m.config_hash},
          {"seed", m.seed},                 {"inputs", m.inputs},   {"outputs", m.outputs},
          {"tool_version", m.tool_version}, {"wall_time_seconds", m.wall_time_seconds},
          {"summary", m.summary}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.inputs = j.at("inputs").get<std::vector<std::string>>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  m.summary = j.value("summary", json::object());
  return m;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) { return strprintf("%016llx", static_cast<unsigned long long>(v)); }

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const std::string t(trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// Settings of one subcommand, reachable both as `--key` flags and as
// `key = value` lines of the config file. Flags given on the command line
// win over the file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_file_, "INI file; keys of the [" + app_->get_name() + "] section and the top level");
  }

  template <typename T>
  CLI::Option* option(const std::string& key, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + key, target, help);
    bind(key, opt, target);
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& target, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + key + ",!--no-" + key, target, help);
    bind(key, opt, target);
    return opt;
  }

  // Keys of [<subcommand>] must be known; unknown top-level keys are left to
  // other subcommands sharing the file.
  void apply_config_file() {
    if (config_file_.empty()) return;
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(config_file_, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    for (const auto& [key, node] : tree) {
      if (node.empty()) set_from_config(key, node.data(), false);
    }
    if (auto section = tree.get_child_optional(app_->get_name())) {
      for (const auto& [key, node] : *section) set_from_config(key, node.data(), true);
    }
  }

  const std::string& config_file() const { return config_file_; }
  json effective() const {
    json j = json::object();
    for (const auto& [key, entry] : keys_) j[key] = entry.dump();
    return j;
  }

 private:
  struct Entry {
    CLI::Option* option;
    std::function<void(const std::string&)> assign;
    std::function<json()> dump;
  };

  template <typename T>
  void bind(const std::string& key, CLI::Option* opt, T& target) {
    keys_[key] = {opt,
                  [&target, key](const std::string& text) {
                    if (!CLI::detail::lexical_cast(text, target)) {
                      throw UsageError("config: bad value '" + text + "' for " + key);
                    }
                  },
                  [&target] { return json(target); }};
  }

  void set_from_config(std::string key, const std::string& value, bool strict) {
    std::replace(key.begin(), key.end(), '_', '-');
    auto it = keys_.find(key);
    if (it == keys_.end()) {
      if (strict) throw UsageError("config: unknown key '" + key + "' in [" + app_->get_name() + "]");
      return;
    }
    if (it->second.option->count() == 0) it->second.assign(std::string(trim(value)));
  }

  CLI::App* app_;
  std::string config_file_;
  std::map<std::string, Entry> keys_;
};

class ManifestScope {
 public:
  ManifestScope(std::string command, const Settings& settings, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config = settings.effective();
    manifest_.config_hash = hex64(StableHash().add(manifest_.config.dump()).value());
    manifest_.seed = seed;
    manifest_.tool_version = tool_version();
    if (!settings.config_file().empty()) manifest_.inputs.push_back(settings.config_file());
  }
  RunManifest& operator*() { return manifest_; }
  RunManifest* operator->() { return &manifest_; }

  void write(const fs::path& dir) {
    manifest_.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(dir);
    std::ofstream out(dir / "run_manifest.json", std::ios::binary);
    out << manifest_to_json(manifest_).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + (dir / "run_manifest.json").string());
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::uint64_t seed = 0;
  int objects = 8;
  int frames = 20;
  double fps = 1.0;
  double room = 3.0;
  int width = 192;
  int height = 144;
  std::string split = "train";
  std::string out;
};

int cmd_synth(SynthArgs& a, Settings& s, std::ostream& out) {
  SynthSpec spec;
  spec.num_objects = a.objects;
  spec.num_frames = a.frames;
  spec.fps = a.fps;
  spec.room_half_extent = a.room;
  spec.image_width = a.width;
  spec.image_height = a.height;
  if (a.split != "train" && a.split != "eval") throw UsageError("--split must be train or eval");
  spec.split = a.split == "train" ? Split::kTrain : Split::kEval;
  ManifestScope manifest("synth", s, a.seed);
  const Scene scene = generate_synthetic_scene(a.seed, spec);
  save_scene(scene, a.out);
  manifest->outputs.push_back(a.out);
  manifest->summary = {{"video_id", scene.video_id}, {"frames", scene.frames.size()}, {"objects", scene.objects.size()}};
  manifest.write(a.out);
  out << strprintf("wrote scene %s (%zu frames, %zu objects) to %s\n", scene.video_id.c_str(), scene.frames.size(),
                   scene.objects.size(), a.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string scenes;
  std::string out;
  std::uint64_t seed = 0;
  double target_fps = 1.0;
  std::string categories = "all";
  int max_per_category = 4;
  bool overlap_rejection = true;
  std::string convention = "obb";
  bool scale_aug = false;
  double scale_min = 1.0;
  double scale_max = 10.0;
  std::string cot_depth = "gt";
  std::string vocabulary = "default";
  int jobs = 1;
};

GenerationConfig generation_config(const GenerateArgs& a) {
  GenerationConfig c;
  c.seed = a.seed;
  if (!(a.target_fps > 0)) throw UsageError("--target-fps must be positive");
  c.target_fps = a.target_fps;
  if (a.categories != "all") {
    c.categories.clear();
    for (const auto& name : split_list(a.categories)) c.categories.insert(parse_category(name));
    if (c.categories.empty()) throw UsageError("--categories is empty");
  }
  if (a.max_per_category < 1) throw UsageError("--max-per-category must be >= 1");
  c.max_questions_per_frame_per_category = a.max_per_category;
  c.distance_overlap_rejection = a.overlap_rejection;
  c.convention = parse_convention(a.convention);
  if (a.scale_aug) {
    if (!(a.scale_min >= 1.0 && a.scale_max >= a.scale_min)) throw UsageError("scale range must satisfy 1 <= min <= max");
    c.scale_aug = std::make_pair(a.scale_min, a.scale_max);
  }
  c.depth_source_for_cot = parse_depth_source(a.cot_depth);
  if (a.vocabulary == "default") {
    c.vocabulary = default_vocabulary();
  } else if (a.vocabulary != "none") {
    c.vocabulary = split_list(a.vocabulary);
  }
  return c;
}

int cmd_generate(GenerateArgs& a, Settings& s, std::ostream& out) {
  const GenerationConfig config = generation_config(a);
  ManifestScope manifest("generate", s, a.seed);
  const std::vector<Scene> scenes = load_scenes(a.scenes);
  GenerationStats stats;
  const std::vector<QARecord> records = generate_dataset(scenes, config, a.jobs, &stats);
  const fs::path dataset = fs::path(a.out) / "dataset.jsonl";
  fs::create_directories(a.out);
  write_records(dataset, records);

  json emitted = json::object();
  for (const auto& [c, n] : stats.emitted) emitted[std::string(category_name(c))] = n;
  manifest->inputs.push_back(a.scenes);
  manifest->outputs.push_back(dataset.string());
  manifest->summary = {{"records", records.size()}, {"emitted", emitted}, {"skipped", stats.skipped}};
  manifest.write(a.out);
  out << strprintf("wrote %zu records from %zu scenes to %s\n", records.size(), scenes.size(), dataset.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
  std::string benchmark;
  std::string out;
  std::string judges;
  int threshold = 3;
  std::uint64_t judge_seed = 0;
  std::string training;
  double timeout = 30.0;
  std::string cache_dir;
  bool cache = true;
  int jobs = 1;
};

// "N*descriptor" repeats a descriptor. Judge ids are "<descriptor>#<k>",
// k counting occurrences of that descriptor from 1.
std::vector<std::pair<std::string, std::string>> expand_judges(const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  std::map<std::string, int> seen;
  for (const auto& item : split_list(spec)) {
    int repeat = 1;
    std::string descriptor = item;
    if (const auto star = item.find('*'); star != std::string::npos && item.rfind("http:", 0) != 0) {
      if (!CLI::detail::lexical_cast(item.substr(0, star), repeat) || repeat < 1) {
        throw UsageError("bad judge repeat count in '" + item + "'");
      }
      descriptor = item.substr(star + 1);
    }
    for (int i = 0; i < repeat; ++i) out.emplace_back(descriptor, descriptor + "#" + std::to_string(++seen[descriptor]));
  }
  return out;
}

int cmd_filter(FilterArgs& a, Settings& s, std::ostream& out, std::ostream& err) {
  const auto panel_spec = expand_judges(a.judges);
  if (panel_spec.empty()) throw UsageError("--judges lists no judge");
  if (a.threshold < 1 || static_cast<std::size_t>(a.threshold) > panel_spec.size()) {
    throw UsageError(strprintf("--threshold %d needs 1 <= threshold <= panel size (%zu)", a.threshold, panel_spec.size()));
  }
  ManifestScope manifest("filter", s, a.judge_seed);
  const std::vector<QARecord> records = read_records(a.benchmark);
  JudgeContext ctx;
  ctx.seed = a.judge_seed;
  ctx.timeout_seconds = a.timeout;
  ctx.training = a.training.empty() ? records : read_records(a.training);
  std::vector<std::unique_ptr<JudgeClient>> judges;
  std::vector<JudgeClient*> panel;
  for (const auto& [descriptor, id] : panel_spec) {
    judges.push_back(make_judge(descriptor, id, ctx));
    panel.push_back(judges.back().get());
  }

  std::optional<VerdictCache> cache;
  if (a.cache) {
    StableHash key;
    key.add(read_bytes(a.benchmark)).add(a.judge_seed);
    if (!a.training.empty()) key.add(read_bytes(a.training));
    const fs::path dir = a.cache_dir.empty() ? default_cache_dir() : fs::path(a.cache_dir);
    cache.emplace(dir / ("verdicts-" + hex64(key.value()) + ".jsonl"));
  }
  const FilterResult result = filter_benchmark(records, panel, a.threshold, a.jobs, cache ? &*cache : nullptr);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_records(dir / "kept.jsonl", result.kept);
  write_records(dir / "removed.jsonl", result.removed);
  {
    std::ofstream log(dir / "verdicts.jsonl", std::ios::binary);
    for (const auto& v : result.verdicts) log << verdict_to_json(v).dump() << '\n';
  }
  manifest->inputs.push_back(a.benchmark);
  if (!a.training.empty()) manifest->inputs.push_back(a.training);
  for (const char* name : {"kept.jsonl", "removed.jsonl", "verdicts.jsonl"}) manifest->outputs.push_back((dir / name).string());
  manifest->summary = {{"kept", result.kept.size()},
                       {"removed", result.removed.size()},
                       {"incomplete", result.incomplete},
                       {"verdict_cache", cache ? cache->file().string() : std::string()}};
  manifest.write(dir);
  out << strprintf("kept %zu, removed %zu of %zu records (threshold %d of %zu judges)\n", result.kept.size(),
                   result.removed.size(), records.size(), a.threshold, panel.size());
  if (!result.incomplete.empty()) {
    err << strprintf("PanelIncomplete: %zu records kept without a full panel; rerun to retry\n",
                     result.incomplete.size());
    for (const auto& [pair, text] : result.failures) err << "  " << pair << ": " << text << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string benchmark;
  std::string predictions;
  std::string report;
  std::string scenes;
};

int cmd_eval(EvalArgs& a, Settings& s, std::ostream& out) {
  ManifestScope manifest("eval", s, 0);
  const std::vector<QARecord> records = read_records(a.benchmark);
  const std::vector<Prediction> predictions = read_predictions(a.predictions);
  std::vector<Scene> scenes;
  if (!a.scenes.empty()) scenes = load_scenes(a.scenes);
  const EvalReport report = evaluate(records, predictions, a.scenes.empty() ? nullptr : &scenes);

  const fs::path dir(a.report);
  fs::create_directories(dir);
  const std::string text = report_to_text(report);
  std::ofstream(dir / "report.json", std::ios::binary) << report_to_json(report).dump(2) << '\n';
  std::ofstream(dir / "report.txt", std::ios::binary) << text;
  manifest->inputs = {a.benchmark, a.predictions};
  if (!a.scenes.empty()) manifest->inputs.push_back(a.scenes);
  manifest->outputs = {(dir / "report.json").string(), (dir / "report.txt").string()};
  manifest->summary = {{"average", report.average}, {"evaluated", report.evaluated}};
  manifest.write(dir);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// depth-serve

struct ServeArgs {
  std::string scenes;
  std::string listen = "stdio";
};

int cmd_depth_serve(ServeArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  DepthService service(load_scenes(a.scenes));
  if (a.listen == "stdio") {
    service.serve_stream(in, out);
    return kExitOk;
  }
  const auto colon = a.listen.rfind(':');
  int port = 0;
  if (colon == std::string::npos || !CLI::detail::lexical_cast(a.listen.substr(colon + 1), port) || port < 0 ||
      port > 65535) {
    throw UsageError("--listen must be 'stdio' or host:port, got '" + a.listen + "'");
  }
  DepthHttpServer server(service);
  err << "depth service on http://" << a.listen << "/rpc\n" << std::flush;
  server.listen(a.listen.substr(0, colon), port);
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kSpecInfeasible:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Spatial QA generation, blind filtering, depth tool service and evaluation", "svf");
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  CLI::App* synth = app.add_subcommand("synth", "Write a seeded synthetic scene directory");
  Settings synth_s(synth);
  SynthArgs synth_a;
  synth_s.option("seed", synth_a.seed, "Scene seed");
  synth_s.option("objects", synth_a.objects, "Number of objects")->check(CLI::PositiveNumber);
  synth_s.option("frames", synth_a.frames, "Number of frames")->check(CLI::PositiveNumber);
  synth_s.option("fps", synth_a.fps, "Capture frame rate")->check(CLI::PositiveNumber);
  synth_s.option("room", synth_a.room, "Half extent of the square room in meters")->check(CLI::PositiveNumber);
  synth_s.option("width", synth_a.width, "Image width")->check(CLI::PositiveNumber);
  synth_s.option("height", synth_a.height, "Image height")->check(CLI::PositiveNumber);
  synth_s.option("split", synth_a.split, "train or eval");
  synth_s.option("out", synth_a.out, "Output scene directory");

  CLI::App* generate = app.add_subcommand("generate", "Generate a QA dataset from scene directories");
  Settings gen_s(generate);
  GenerateArgs gen_a;
  gen_s.option("scenes", gen_a.scenes, "A scene directory or a directory of scene directories");
  gen_s.option("out", gen_a.out, "Output directory (dataset.jsonl, run_manifest.json)");
  gen_s.option("seed", gen_a.seed, "Generation seed");
  gen_s.option("target-fps", gen_a.target_fps, "Frame sub-sampling rate");
  gen_s.option("categories", gen_a.categories, "Comma-separated category names, or 'all'");
  gen_s.option("max-per-category", gen_a.max_per_category, "Question cap per frame and category");
  gen_s.flag("overlap-rejection", gen_a.overlap_rejection, "Skip distance questions on overlapping boxes");
  gen_s.option("convention", gen_a.convention, "obb or aabb");
  gen_s.flag("scale-aug", gen_a.scale_aug, "Add scale-augmented copies of distance records");
  gen_s.option("scale-min", gen_a.scale_min, "Lower bound of the scale factor");
  gen_s.option("scale-max", gen_a.scale_max, "Upper bound of the scale factor");
  gen_s.option("cot-depth", gen_a.cot_depth, "Depth source for CoT steps: gt, arkit or mono");
  gen_s.option("vocabulary", gen_a.vocabulary, "'default', 'none' or comma-separated labels");
  gen_s.option("jobs", gen_a.jobs, "Worker threads")->check(CLI::PositiveNumber);

  CLI::App* filter = app.add_subcommand("filter", "Remove records a blind judge panel answers correctly");
  Settings fil_s(filter);
  FilterArgs fil_a;
  fil_s.option("benchmark", fil_a.benchmark, "Benchmark JSONL");
  fil_s.option("out", fil_a.out, "Output directory (kept, removed, verdicts, run_manifest.json)");
  fil_s.option("judges", fil_a.judges, "Comma-separated judge descriptors; N*descriptor repeats one");
  fil_s.option("threshold", fil_a.threshold, "Correct verdicts needed to remove a record");
  fil_s.option("judge-seed", fil_a.judge_seed, "Seed of seeded_random judges");
  fil_s.option("training", fil_a.training, "Training JSONL for majority_class judges (default: the benchmark)");
  fil_s.option("timeout", fil_a.timeout, "HTTP judge timeout in seconds")->check(CLI::PositiveNumber);
  fil_s.option("cache-dir", fil_a.cache_dir, "Verdict cache directory (default $SVF_CACHE_DIR or .svf_cache)");
  fil_s.flag("cache", fil_a.cache, "Use the verdict cache");
  fil_s.option("jobs", fil_a.jobs, "Concurrent judge queries")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("eval", "Score a prediction file against a benchmark");
  Settings eval_s(eval);
  EvalArgs eval_a;
  eval_s.option("benchmark", eval_a.benchmark, "Benchmark JSONL");
  eval_s.option("predictions", eval_a.predictions, "Predictions JSONL");
  eval_s.option("report", eval_a.report, "Report directory (report.json, report.txt, run_manifest.json)");
  eval_s.option("scenes", eval_a.scenes, "Scenes for the depth-estimation block");

  CLI::App* serve = app.add_subcommand("depth-serve", "Answer Depth(...) calls over stdio or HTTP");
  Settings serve_s(serve);
  ServeArgs serve_a;
  serve_s.option("scenes", serve_a.scenes, "A scene directory or a directory of scene directories");
  serve_s.option("listen", serve_a.listen, "'stdio' or host:port");

  struct Command {
    CLI::App* app;
    Settings* settings;
    std::vector<std::string> required;
  };
  const std::vector<Command> commands{{synth, &synth_s, {"out"}},
                                      {generate, &gen_s, {"scenes", "out"}},
                                      {filter, &fil_s, {"benchmark", "out", "judges"}},
                                      {eval, &eval_s, {"benchmark", "predictions", "report"}},
                                      {serve, &serve_s, {"scenes"}}};

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (const Command& c : commands) {
      if (!c.app->parsed()) continue;
      c.settings->apply_config_file();
      const json effective = c.settings->effective();
      for (const auto& key : c.required) {
        if (effective.at(key).get<std::string>().empty()) throw UsageError("--" + key + " is required");
      }
    }
    if (synth->parsed()) return cmd_synth(synth_a, synth_s, out);
    if (generate->parsed()) return cmd_generate(gen_a, gen_s, out);
    if (filter->parsed()) return cmd_filter(fil_a, fil_s, out, err);
    if (eval->parsed()) return cmd_eval(eval_a, eval_s, out);
    return cmd_depth_serve(serve_a, std::cin, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace svf
