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

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "svf/qa.hpp"
#include "svf/scene.hpp"

namespace svf {

// Free-text answer parsing. Only the text after the last "Answer:" marker is
// considered when the marker is present. nullopt is a parse failure.
//   binary       first "yes"/"no" word
//   counting     last integer (digits or zero..twenty)
//   multichoice  first "(X)", else first standalone capital A-D
//   regression   last number carrying a unit (m, cm, mm, ft, in and long
//                forms), else the last bare number read as meters
//   grounding    last 4 numbers (2D) or last 7 numbers (3D: center, dims, yaw)
std::optional<Answer> parse_answer(std::string_view raw, Category category);

// Correctness of a typed answer: exact for binary, counting and multichoice;
// |pred - gt| / gt <= tolerance for regression. Grounding answers are never
// "correct" in this sense (they are scored by AP).
bool answer_correct(const QARecord& record, const Answer& predicted, double tolerance = 0.10);

struct Prediction {
  std::string record_id;
  std::string raw_text;
  std::optional<double> confidence;  // grounding only; 1.0 when absent
};

// Predictions JSONL: {record_id, raw_text, confidence?}. Throws MissingFile,
// or SchemaViolation naming the 1-based line.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

// The reference response for a record: its CoT lines and an "Answer:" line.
// Metric answers are printed at full precision so that rounding cannot push a
// small distance past the 10% tolerance.
Prediction oracle_prediction(const QARecord& record);

// "Depth(<label>, [a, b, c, d]) -> <value>m" lines found anywhere in `text`.
struct PredictedDepth {
  std::string label;
  Box2D box;
  double meters;
};
std::vector<PredictedDepth> parse_depth_lines(std::string_view text);

struct AccuracyScore {
  double value = 0.0;  // percent
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t parse_failures = 0;
  std::size_t missing = 0;
};

// Uses the first prediction per record. Missing predictions count as wrong.
AccuracyScore score_accuracy(const std::vector<QARecord>& records,
                             const std::multimap<std::string, Prediction>& predictions,
                             double tolerance = 0.10);

struct GroundTruthBox {
  std::string record_id;
  Answer box;
};
struct DetectionBox {
  std::string record_id;
  Answer box;
  double confidence = 1.0;
};
using IouFn = std::function<double(const Answer&, const Answer&)>;
double iou_2d_answers(const Answer& a, const Answer& b);
double iou_3d_answers(const Answer& a, const Answer& b);

// Greedy confidence-ordered matching (stable on ties) of each detection to the
// best unmatched ground truth of the same record with IoU >= threshold; AP is
// the all-point interpolated area under the precision/recall curve, percent.
double score_ap(const std::vector<GroundTruthBox>& ground_truth, const std::vector<DetectionBox>& detections,
                const IouFn& iou, double threshold);

struct DepthScores {
  double delta1 = 0.0;   // percent with max(p/g, g/p) < 1.25
  double abs_rel = 0.0;  // percent mean |p - g| / g
  std::size_t count = 0;
};
// Throws EmptySet, or InvalidArgument when a ground truth is not positive.
DepthScores score_depth_estimates(const std::vector<std::pair<double, double>>& pred_gt);

struct CategoryResult {
  Category category;
  std::string metric;  // "Acc", "Acc@10%", "AP@50", "AP@15"
  double value = 0.0;
  std::size_t records = 0;
  std::size_t parse_failures = 0;
  std::size_t missing = 0;
};

struct EvalReport {
  std::vector<CategoryResult> categories;  // present categories, enum order
  double average = 0.0;                    // unweighted mean over categories
  std::size_t evaluated = 0;
  std::size_t parse_failures = 0;
  std::size_t missing = 0;
  std::optional<DepthScores> depth;
  std::size_t depth_pairs_skipped = 0;  // box without valid GT depth
};

// `scenes` enables the depth block: every predicted CoT depth is paired with
// the GT-depth median inside the predicted box of the record's frame.
EvalReport evaluate(const std::vector<QARecord>& records, const std::vector<Prediction>& predictions,
                    const std::vector<Scene>* scenes = nullptr);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace svf
