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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "svf/depth_map.hpp"
#include "svf/geometry.hpp"
#include "svf/rng.hpp"
#include "svf/scene.hpp"

namespace svf {

enum class Category {
  kBinaryViewpoint,
  kBinarySize,
  kBinaryPresence,
  kCounting,
  kMultichoice,
  kRegressionEgoDist,
  kRegressionObjDist,
  kRegressionCenterDist,
  kRegressionSize,
  kGrounding2D,
  kGrounding3D,
};

inline constexpr Category kAllCategories[] = {
    Category::kBinaryViewpoint,      Category::kBinarySize,        Category::kBinaryPresence,
    Category::kCounting,             Category::kMultichoice,       Category::kRegressionEgoDist,
    Category::kRegressionObjDist,    Category::kRegressionCenterDist, Category::kRegressionSize,
    Category::kGrounding2D,          Category::kGrounding3D,
};

std::string_view category_name(Category c);
Category parse_category(std::string_view name);
bool is_binary(Category c);
bool is_regression(Category c);
bool is_grounding(Category c);
// Regression categories whose answer is a distance (scaled by augmentation).
bool is_distance(Category c);

enum class Convention { kObb, kAabb };
std::string_view convention_name(Convention c);
Convention parse_convention(std::string_view name);

struct Meters {
  double value;
  bool operator==(const Meters&) const = default;
};
struct ChoiceLetter {
  char letter;
  bool operator==(const ChoiceLetter&) const = default;
};

// bool: binary yes/no; int64: counting; ChoiceLetter: multichoice;
// Meters: regression; Box2D / OrientedBox3D: grounding.
using Answer = std::variant<bool, std::int64_t, ChoiceLetter, Meters, Box2D, OrientedBox3D>;

// Multichoice option: a count, a metric value in meters, or an object label.
using Choice = std::variant<std::int64_t, double, std::string>;

struct CotStep {
  std::string label;
  std::string object_id;
  Box2D box;  // integer pixel coordinates, exactly as printed
  double depth;
};

struct QARecord {
  std::string record_id;
  std::string video_id;
  std::string frame_id;
  Category category = Category::kCounting;
  std::string question;
  Answer answer;
  std::vector<Choice> choices;
  std::vector<CotStep> cot_steps;
  std::vector<std::string> referenced_objects;
  Convention convention = Convention::kObb;
  double scale_factor = 1.0;
};

// Canonical answer text: "yes"/"no", "3", "B", "1.32m", "[x0, y0, x1, y1]",
// "[cx, cy, cz, dx, dy, dz, yaw]".
std::string answer_text(const QARecord& record);
std::string format_meters(double meters);
std::string choice_text(const Choice& choice);

// The CoT / tool-use transcript of a record: one
// "Depth(<label>, [x_min, y_min, x_max, y_max]) -> <value>m" line per step,
// then "Answer: <answer>".
std::string format_depth_call(std::string_view label, const Box2D& box);
std::string cot_text(const QARecord& record);

nlohmann::json record_to_json(const QARecord& record);
// Throws SchemaViolation.
QARecord record_from_json(const nlohmann::json& j);

// JSONL, one record per line. Reading throws MissingFile, or SchemaViolation
// naming the 1-based line.
void write_records(const std::filesystem::path& path, const std::vector<QARecord>& records);
std::vector<QARecord> read_records(const std::filesystem::path& path);

struct GenerationConfig {
  std::uint64_t seed = 0;
  double target_fps = 1.0;
  std::set<Category> categories{std::begin(kAllCategories), std::end(kAllCategories)};
  int max_questions_per_frame_per_category = 4;
  bool distance_overlap_rejection = true;
  Convention convention = Convention::kObb;
  std::optional<std::pair<double, double>> scale_aug;  // default range [1, 10] when on
  DepthSource depth_source_for_cot = DepthSource::kGroundTruth;
  // Extra labels for negative samples and referring distractors; the scene's
  // own labels are always included.
  std::vector<std::string> vocabulary;
};

// Everything a generator needs about one frame. Object point clouds are
// segmented lazily and cached.
class FrameContext {
 public:
  FrameContext(const Scene& scene, const Frame& frame, const GenerationConfig& config);

  const Scene& scene() const { return scene_; }
  const Frame& frame() const { return frame_; }
  const GenerationConfig& config() const { return config_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  const VisibleObject& visible(const std::string& object_id) const;
  const std::string& label(const std::string& object_id) const;
  std::vector<std::string> visible_labels() const;  // sorted, distinct
  // Camera-frame box under the active convention (AABBs become yaw-0 boxes).
  OrientedBox3D box(const std::string& object_id) const;

  // GT-depth pixels inside the object's 2D box whose backprojection lies in
  // its 3D box grown by 1 cm. Throws EmptyCloud.
  const PointCloud& object_cloud(const std::string& object_id);

 private:
  const Scene& scene_;
  const Frame& frame_;
  GenerationConfig config_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, PointCloud> clouds_;
};

enum class LabelStatus { kUnique, kAmbiguous, kAbsent };
struct LabelLookup {
  LabelStatus status;
  std::string object_id;  // set when unique
};
LabelLookup check_unambiguous(const FrameContext& ctx, const std::string& label);

enum class ViewpointRelation { kLeftRight, kFrontBehind };
enum class SizeDimension { kWidth, kLength, kHeight };
enum class RegressionKind { kEgoDistance, kObjectDistance, kCenterDistance, kSize };

// Generators throw svf::Error with TieSkipped, OverlapRejected, EmptyCloud,
// NoNegativeAvailable, Ambiguous ... when a candidate cannot yield a record.
QARecord gen_binary_viewpoint(FrameContext& ctx, const std::string& a, const std::string& b,
                              ViewpointRelation relation, Rng& rng);
QARecord gen_binary_size(FrameContext& ctx, const std::string& a, const std::string& b,
                         SizeDimension dim, Rng& rng);
std::pair<QARecord, QARecord> gen_binary_presence(FrameContext& ctx, const std::string& label, Rng& rng);
QARecord gen_counting(FrameContext& ctx, const std::string& label, Rng& rng);
QARecord gen_regression(FrameContext& ctx, RegressionKind kind, const std::vector<std::string>& refs,
                        SizeDimension dim, Rng& rng);
QARecord gen_grounding_2d(FrameContext& ctx, const std::string& object_id, Rng& rng);
QARecord gen_grounding_3d(FrameContext& ctx, const std::string& object_id, Rng& rng);
// Counting or regression base -> 4-option multichoice record.
QARecord gen_multichoice(const QARecord& base, Rng& rng);
// Box -> label multichoice with three wrong labels from the vocabulary.
QARecord gen_referring(FrameContext& ctx, const std::string& object_id, Rng& rng);

// Adds per-object depth steps (median of `source` depth inside the integer
// 2D box). Throws EmptyDepthRegion.
QARecord build_cot_sequence(const QARecord& record, const FrameContext& ctx, DepthSource source);

// Multiplies distance answers and CoT depths by `factor`; other answers are
// untouched.
std::vector<QARecord> apply_scale_augmentation(const std::vector<QARecord>& records, double factor);

// Uniform draw from [range.first, range.second]; the factor used for each
// scaled copy in the pipeline.
double sample_scale_factor(Rng& rng, std::pair<double, double> range);

struct MultiviewPrompt {
  std::string text;
  std::vector<std::string> images;
};
// Support frames oldest first, then the reference frame, then the question.
MultiviewPrompt assemble_multiview_prompt(const QARecord& record, const Frame& reference,
                                          const std::vector<const Frame*>& support);

struct GenerationStats {
  std::map<Category, std::size_t> emitted;
  std::map<std::string, std::size_t> skipped;  // by error code name
  void merge(const GenerationStats& other);
};

// Records for one reference frame of `full_scene`, in category order.
std::vector<QARecord> generate_frame_records(const Scene& full_scene, const Frame& frame,
                                             const GenerationConfig& config,
                                             GenerationStats* stats = nullptr);

// Sub-samples each scene at config.target_fps and generates every frame.
// Output order is (scene, frame, category) and independent of `jobs`.
std::vector<QARecord> generate_dataset(const std::vector<Scene>& scenes,
                                       const GenerationConfig& config, int jobs = 1,
                                       GenerationStats* stats = nullptr);

}  // namespace svf
