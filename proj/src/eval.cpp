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

#include "svf/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>

#include "svf/error.hpp"
#include "svf/json_io.hpp"
#include "svf/strings.hpp"

namespace svf {

using nlohmann::json;

namespace {

struct NumberToken {
  double value;
  bool integral;
  std::size_t end;  // offset just past the number
};

const std::regex& number_regex() {
  static const std::regex re(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)");
  return re;
}

std::vector<NumberToken> numbers_in(std::string_view text) {
  std::vector<NumberToken> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_regex()); it != std::sregex_iterator(); ++it) {
    const std::string token = it->str();
    // Skip digits glued to a preceding letter ("obj_0003", "f2").
    const auto pos = static_cast<std::size_t>(it->position());
    if (pos > 0 && (std::isalpha(static_cast<unsigned char>(s[pos - 1])) || s[pos - 1] == '_')) continue;
    const double value = std::strtod(token.c_str(), nullptr);
    if (!std::isfinite(value)) continue;
    const bool integral = token.find_first_of(".eE") == std::string::npos;
    out.push_back({value, integral, pos + token.size()});
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::pair<std::string, std::size_t>> words_in(std::string_view text) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    out.emplace_back(lower(text.substr(start, i - start)), start);
  }
  return out;
}

// Meters per unit word.
std::optional<double> unit_scale(const std::string& word) {
  static const std::map<std::string, double> kUnits = {
      {"m", 1.0},          {"meter", 1.0},       {"meters", 1.0},      {"metre", 1.0},
      {"metres", 1.0},     {"cm", 0.01},         {"centimeter", 0.01}, {"centimeters", 0.01},
      {"centimetre", 0.01}, {"centimetres", 0.01}, {"mm", 0.001},     {"millimeter", 0.001},
      {"millimeters", 0.001}, {"millimetre", 0.001}, {"millimetres", 0.001}, {"ft", 0.3048},
      {"foot", 0.3048},    {"feet", 0.3048},     {"in", 0.0254},       {"inch", 0.0254},
      {"inches", 0.0254},
  };
  auto it = kUnits.find(word);
  if (it == kUnits.end()) return std::nullopt;
  return it->second;
}

std::string_view answer_scope(std::string_view raw) {
  const auto pos = raw.rfind("Answer:");
  return pos == std::string_view::npos ? raw : raw.substr(pos + 7);
}

std::optional<Answer> parse_binary(std::string_view text) {
  for (const auto& [word, pos] : words_in(text)) {
    if (word == "yes") return Answer{true};
    if (word == "no") return Answer{false};
  }
  return std::nullopt;
}

std::optional<Answer> parse_count(std::string_view text) {
  static const std::map<std::string, std::int64_t> kWords = {
      {"zero", 0},    {"one", 1},       {"two", 2},       {"three", 3},    {"four", 4},
      {"five", 5},    {"six", 6},       {"seven", 7},     {"eight", 8},    {"nine", 9},
      {"ten", 10},    {"eleven", 11},   {"twelve", 12},   {"thirteen", 13}, {"fourteen", 14},
      {"fifteen", 15}, {"sixteen", 16}, {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19},
      {"twenty", 20}, {"none", 0},
  };
  std::optional<std::int64_t> best;
  std::size_t best_pos = 0;
  for (const auto& n : numbers_in(text)) {
    if (n.integral && n.value >= 0 && n.end >= best_pos) {
      best = static_cast<std::int64_t>(n.value);
      best_pos = n.end;
    }
  }
  for (const auto& [word, pos] : words_in(text)) {
    auto it = kWords.find(word);
    if (it != kWords.end() && pos + word.size() >= best_pos) {
      best = it->second;
      best_pos = pos + word.size();
    }
  }
  if (!best) return std::nullopt;
  return Answer{*best};
}

std::optional<Answer> parse_letter(std::string_view text) {
  static const std::regex paren(R"(\(\s*([A-Da-d])\s*\))");
  static const std::regex bare(R"((^|[^A-Za-z])([A-D])([^A-Za-z]|$))");
  const std::string s(text);
  std::smatch m;
  if (std::regex_search(s, m, paren)) {
    return Answer{ChoiceLetter{static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])))}};
  }
  if (std::regex_search(s, m, bare)) return Answer{ChoiceLetter{m[2].str()[0]}};
  return std::nullopt;
}

std::optional<Answer> parse_meters(std::string_view text) {
  std::optional<double> with_unit;
  std::optional<double> bare;
  for (const auto& n : numbers_in(text)) {
    std::size_t i = n.end;
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    const auto scale = j > i ? unit_scale(lower(text.substr(i, j - i))) : std::nullopt;
    if (scale) {
      with_unit = n.value * *scale;
    } else {
      bare = n.value;
    }
  }
  if (with_unit) return Answer{Meters{*with_unit}};
  if (bare) return Answer{Meters{*bare}};
  return std::nullopt;
}

std::optional<Answer> parse_box(std::string_view text, std::size_t count) {
  const auto nums = numbers_in(text);
  if (nums.size() < count) return std::nullopt;
  std::vector<double> v;
  for (std::size_t i = nums.size() - count; i < nums.size(); ++i) v.push_back(nums[i].value);
  try {
    if (count == 4) return Answer{Box2D(v[0], v[1], v[2], v[3])};
    return Answer{OrientedBox3D(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]), v[6])};
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string metric_name(Category c) {
  if (c == Category::kGrounding2D) return "AP@50";
  if (c == Category::kGrounding3D) return "AP@15";
  if (is_regression(c)) return "Acc@10%";
  return "Acc";
}

template <typename T>
T json_field(const json& j, const char* key) {
  return j.at(key).get<T>();
}

}  // namespace

std::optional<Answer> parse_answer(std::string_view raw, Category category) {
  const std::string_view text = answer_scope(raw);
  switch (category) {
    case Category::kBinaryViewpoint:
    case Category::kBinarySize:
    case Category::kBinaryPresence:
      return parse_binary(text);
    case Category::kCounting:
      return parse_count(text);
    case Category::kMultichoice:
      return parse_letter(text);
    case Category::kRegressionEgoDist:
    case Category::kRegressionObjDist:
    case Category::kRegressionCenterDist:
    case Category::kRegressionSize:
      return parse_meters(text);
    case Category::kGrounding2D:
      return parse_box(text, 4);
    case Category::kGrounding3D:
      return parse_box(text, 7);
  }
  return std::nullopt;
}

bool answer_correct(const QARecord& record, const Answer& predicted, double tolerance) {
  if (is_grounding(record.category) || predicted.index() != record.answer.index()) return false;
  if (is_regression(record.category)) {
    const double gt = std::get<Meters>(record.answer).value;
    const double p = std::get<Meters>(predicted).value;
    return std::abs(p - gt) / gt <= tolerance;
  }
  return predicted == record.answer;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<Prediction> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Prediction p{json_field<std::string>(j, "record_id"), json_field<std::string>(j, "raw_text"), std::nullopt};
      if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) p.confidence = it->get<double>();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (const auto& p : predictions) {
    json j = {{"record_id", p.record_id}, {"raw_text", p.raw_text}};
    if (p.confidence) j["confidence"] = *p.confidence;
    out << j.dump() << '\n';
  }
}

Prediction oracle_prediction(const QARecord& record) {
  std::string text = cot_text(record);
  if (const auto* m = std::get_if<Meters>(&record.answer)) {
    text = text.substr(0, text.rfind("Answer:")) + strprintf("Answer: %.17gm", m->value);
  } else if (const auto* b = std::get_if<Box2D>(&record.answer)) {
    text = strprintf("Answer: [%.17g, %.17g, %.17g, %.17g]", b->x_min, b->y_min, b->x_max, b->y_max);
  } else if (const auto* o = std::get_if<OrientedBox3D>(&record.answer)) {
    const Vec3& c = o->center();
    const Vec3& d = o->dims();
    text = strprintf("Answer: [%.17g, %.17g, %.17g, %.17g, %.17g, %.17g, %.17g]", c.x(), c.y(), c.z(), d.x(), d.y(),
                     d.z(), o->yaw());
  }
  return {record.record_id, text, std::nullopt};
}

std::vector<PredictedDepth> parse_depth_lines(std::string_view text) {
  static const std::regex line(
      R"(Depth\(\s*([^,\[\]\(\)]+?)\s*,\s*\[([^\]]*)\]\s*\)\s*->\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*m)");
  std::vector<PredictedDepth> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), line); it != std::sregex_iterator(); ++it) {
    const auto nums = numbers_in((*it)[2].str());
    if (nums.size() != 4) continue;
    try {
      out.push_back({(*it)[1].str(), Box2D(nums[0].value, nums[1].value, nums[2].value, nums[3].value),
                     std::strtod((*it)[3].str().c_str(), nullptr)});
    } catch (const Error&) {
      continue;
    }
  }
  return out;
}

AccuracyScore score_accuracy(const std::vector<QARecord>& records,
                             const std::multimap<std::string, Prediction>& predictions, double tolerance) {
  AccuracyScore s;
  for (const QARecord& r : records) {
    ++s.evaluated;
    auto it = predictions.find(r.record_id);
    if (it == predictions.end()) {
      ++s.missing;
      continue;
    }
    const auto parsed = parse_answer(it->second.raw_text, r.category);
    if (!parsed) {
      ++s.parse_failures;
      continue;
    }
    s.correct += answer_correct(r, *parsed, tolerance);
  }
  s.value = s.evaluated ? 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.evaluated) : 0.0;
  return s;
}

double iou_2d_answers(const Answer& a, const Answer& b) {
  const auto* x = std::get_if<Box2D>(&a);
  const auto* y = std::get_if<Box2D>(&b);
  return x && y ? iou_2d(*x, *y) : 0.0;
}

double iou_3d_answers(const Answer& a, const Answer& b) {
  const auto* x = std::get_if<OrientedBox3D>(&a);
  const auto* y = std::get_if<OrientedBox3D>(&b);
  return x && y ? iou_3d_yaw(*x, *y) : 0.0;
}

double score_ap(const std::vector<GroundTruthBox>& ground_truth, const std::vector<DetectionBox>& detections,
                const IouFn& iou, double threshold) {
  if (ground_truth.empty()) return 0.0;
  std::multimap<std::string, std::size_t> gt_by_record;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) gt_by_record.emplace(ground_truth[i].record_id, i);
  std::vector<bool> matched(ground_truth.size(), false);

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t d : order) {
    ++seen;
    double best = -1.0;
    std::size_t best_gt = 0;
    auto [lo, hi] = gt_by_record.equal_range(detections[d].record_id);
    for (auto it = lo; it != hi; ++it) {
      if (matched[it->second]) continue;
      const double v = iou(detections[d].box, ground_truth[it->second].box);
      if (v >= threshold && v > best) {
        best = v;
        best_gt = it->second;
      }
    }
    if (best >= 0.0) {
      matched[best_gt] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(ground_truth.size()));
  }
  // All-point interpolation: precision envelope, integrated over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return 100.0 * ap;
}

DepthScores score_depth_estimates(const std::vector<std::pair<double, double>>& pred_gt) {
  if (pred_gt.empty()) throw Error(ErrorCode::kEmptySet, "no depth pairs to score");
  DepthScores s;
  std::size_t within = 0;
  double rel = 0.0;
  for (const auto& [p, g] : pred_gt) {
    if (!(g > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ground-truth depth must be positive");
    within += std::max(p / g, g / p) < 1.25;
    rel += std::abs(p - g) / g;
  }
  s.count = pred_gt.size();
  s.delta1 = 100.0 * static_cast<double>(within) / static_cast<double>(s.count);
  s.abs_rel = 100.0 * rel / static_cast<double>(s.count);
  return s;
}

EvalReport evaluate(const std::vector<QARecord>& records, const std::vector<Prediction>& predictions,
                    const std::vector<Scene>* scenes) {
  std::multimap<std::string, Prediction> by_id;
  for (const auto& p : predictions) by_id.emplace(p.record_id, p);

  std::map<Category, std::vector<const QARecord*>> grouped;
  for (const auto& r : records) grouped[r.category].push_back(&r);

  EvalReport report;
  for (const auto& [category, members] : grouped) {
    CategoryResult result{category, metric_name(category)};
    result.records = members.size();
    if (is_grounding(category)) {
      std::vector<GroundTruthBox> gts;
      std::vector<DetectionBox> dets;
      for (const QARecord* r : members) {
        gts.push_back({r->record_id, r->answer});
        auto [lo, hi] = by_id.equal_range(r->record_id);
        if (lo == hi) ++result.missing;
        for (auto it = lo; it != hi; ++it) {
          const auto parsed = parse_answer(it->second.raw_text, category);
          if (!parsed) {
            ++result.parse_failures;
            continue;
          }
          dets.push_back({r->record_id, *parsed, it->second.confidence.value_or(1.0)});
        }
      }
      const bool flat = category == Category::kGrounding2D;
      result.value = score_ap(gts, dets, flat ? IouFn(iou_2d_answers) : IouFn(iou_3d_answers), flat ? 0.50 : 0.15);
    } else {
      std::vector<QARecord> copies;
      for (const QARecord* r : members) copies.push_back(*r);
      const AccuracyScore s = score_accuracy(copies, by_id);
      result.value = s.value;
      result.parse_failures = s.parse_failures;
      result.missing = s.missing;
    }
    report.evaluated += result.records;
    report.parse_failures += result.parse_failures;
    report.missing += result.missing;
    report.categories.push_back(std::move(result));
  }
  if (!report.categories.empty()) {
    double sum = 0.0;
    for (const auto& c : report.categories) sum += c.value;
    report.average = sum / static_cast<double>(report.categories.size());
  }

  if (scenes) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : records) {
      auto it = by_id.find(r.record_id);
      if (it == by_id.end()) continue;
      const auto steps = parse_depth_lines(it->second.raw_text);
      if (steps.empty()) continue;
      const Frame* frame = nullptr;
      for (const Scene& s : *scenes) {
        if (s.video_id == r.video_id) frame = s.find_frame(r.frame_id);
      }
      const DepthMap* gt = frame ? frame->depth_map(DepthSource::kGroundTruth) : nullptr;
      for (const auto& step : steps) {
        const std::optional<double> median = gt ? median_depth(*gt, step.box) : std::nullopt;
        if (!median) {
          ++report.depth_pairs_skipped;
          continue;
        }
        pairs.emplace_back(step.meters, *median);
      }
    }
    if (!pairs.empty()) report.depth = score_depth_estimates(pairs);
  }
  return report;
}

json report_to_json(const EvalReport& report) {
  json j;
  j["aggregate"] = "unweighted mean over present categories";
  j["categories"] = json::array();
  for (const auto& c : report.categories) {
    j["categories"].push_back({{"category", category_name(c.category)},
                               {"metric", c.metric},
                               {"value", c.value},
                               {"records", c.records},
                               {"parse_failures", c.parse_failures},
                               {"missing", c.missing}});
  }
  j["average"] = report.average;
  j["counts"] = {{"evaluated", report.evaluated},
                 {"parse_failures", report.parse_failures},
                 {"missing", report.missing}};
  if (report.depth) {
    j["depth"] = {{"delta1", report.depth->delta1},
                  {"abs_rel", report.depth->abs_rel},
                  {"pairs", report.depth->count},
                  {"skipped", report.depth_pairs_skipped}};
  }
  return j;
}

std::string report_to_text(const EvalReport& report) {
  std::string out = "# average = unweighted mean over present categories\n";
  out += strprintf("%-24s %-8s %8s %8s %8s %8s\n", "category", "metric", "value", "records", "unparsed", "missing");
  for (const auto& c : report.categories) {
    out += strprintf("%-24s %-8s %8.2f %8zu %8zu %8zu\n", std::string(category_name(c.category)).c_str(),
                     c.metric.c_str(), c.value, c.records, c.parse_failures, c.missing);
  }
  out += strprintf("%-24s %-8s %8.2f %8zu %8zu %8zu\n", "average", "", report.average, report.evaluated,
                   report.parse_failures, report.missing);
  if (report.depth) {
    out += strprintf("%-24s %-8s %8.2f %8zu\n", "depth", "delta1", report.depth->delta1, report.depth->count);
    out += strprintf("%-24s %-8s %8.2f %8zu\n", "depth", "AbsRel", report.depth->abs_rel, report.depth->count);
  }
  return out;
}

}  // namespace svf
