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

#include "svf/qa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>

#include "svf/error.hpp"
#include "svf/json_io.hpp"
#include "svf/parallel.hpp"
#include "svf/strings.hpp"

namespace svf {

using nlohmann::json;

namespace {

constexpr double kPixelTie = 2.0;        // px
constexpr double kDistanceTie = 0.02;    // m
constexpr double kSizeTieRelative = 0.05;
constexpr double kCloudMargin = 0.01;    // m
constexpr double kDistractorFraction = 0.10;
constexpr double kDistractorFloor = 0.05;  // m

struct CategoryInfo {
  Category category;
  std::string_view name;
};

constexpr CategoryInfo kCategoryNames[] = {
    {Category::kBinaryViewpoint, "binary_viewpoint"},
    {Category::kBinarySize, "binary_size"},
    {Category::kBinaryPresence, "binary_presence"},
    {Category::kCounting, "counting"},
    {Category::kMultichoice, "multichoice"},
    {Category::kRegressionEgoDist, "regression_ego_dist"},
    {Category::kRegressionObjDist, "regression_obj_dist"},
    {Category::kRegressionCenterDist, "regression_center_dist"},
    {Category::kRegressionSize, "regression_size"},
    {Category::kGrounding2D, "grounding_2d"},
    {Category::kGrounding3D, "grounding_3d"},
};

std::string plural(const std::string& label) {
  auto ends_with = [&](std::string_view s) {
    return label.size() >= s.size() && label.compare(label.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with("s") || ends_with("x") || ends_with("ch") || ends_with("sh")) return label + "es";
  return label + "s";
}

// Replaces {a}, {b}, {l}, {x} placeholders.
std::string fill(std::string_view tmpl, std::initializer_list<std::pair<char, std::string>> values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 2 < tmpl.size() && tmpl[i + 2] == '}') {
      bool replaced = false;
      for (const auto& [key, value] : values) {
        if (tmpl[i + 1] == key) {
          out += value;
          replaced = true;
          break;
        }
      }
      if (replaced) {
        i += 2;
        continue;
      }
    }
    out += tmpl[i];
  }
  return out;
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& bank, Rng& rng) {
  return bank[rng.index(N)];
}

std::string_view dimension_noun(SizeDimension d) {
  switch (d) {
    case SizeDimension::kWidth: return "width";
    case SizeDimension::kLength: return "length";
    case SizeDimension::kHeight: return "height";
  }
  return "";
}

std::string_view dimension_adjective(SizeDimension d) {
  switch (d) {
    case SizeDimension::kWidth: return "wide";
    case SizeDimension::kLength: return "long";
    case SizeDimension::kHeight: return "tall";
  }
  return "";
}

double dimension_value(const OrientedBox3D& box, SizeDimension d) {
  const ObjectDimensions dims = object_dimensions(box);
  switch (d) {
    case SizeDimension::kWidth: return dims.width;
    case SizeDimension::kLength: return dims.length;
    case SizeDimension::kHeight: return dims.height;
  }
  return 0.0;
}

std::string box2d_text(const Box2D& b, const char* fmt) {
  return "[" + strprintf(fmt, b.x_min) + ", " + strprintf(fmt, b.y_min) + ", " + strprintf(fmt, b.x_max) +
         ", " + strprintf(fmt, b.y_max) + "]";
}

QARecord base_record(const FrameContext& ctx, Category category, std::string question,
                     Answer answer, std::vector<std::string> refs) {
  QARecord r;
  r.video_id = ctx.scene().video_id;
  r.frame_id = ctx.frame().frame_id;
  r.category = category;
  r.question = std::move(question);
  r.answer = std::move(answer);
  r.referenced_objects = std::move(refs);
  r.convention = ctx.config().convention;
  return r;
}

void require_unique(const FrameContext& ctx, const std::string& object_id) {
  const std::string& label = ctx.label(object_id);
  const LabelLookup lookup = check_unambiguous(ctx, label);
  if (lookup.status != LabelStatus::kUnique) {
    throw Error(ErrorCode::kAmbiguous, "label '" + label + "' is not unique in frame " +
                                           ctx.frame().frame_id);
  }
}

std::string letter_of(std::size_t i) { return std::string(1, static_cast<char>('A' + i)); }

std::vector<std::string> labels_excluding(const std::vector<std::string>& vocabulary,
                                          const std::vector<std::string>& excluded) {
  std::vector<std::string> out;
  for (const auto& label : vocabulary) {
    if (std::find(excluded.begin(), excluded.end(), label) == excluded.end()) out.push_back(label);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and text

std::string_view category_name(Category c) {
  for (const auto& info : kCategoryNames) {
    if (info.category == c) return info.name;
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  for (const auto& info : kCategoryNames) {
    if (info.name == name) return info.category;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown category '" + std::string(name) + "'");
}

bool is_binary(Category c) {
  return c == Category::kBinaryViewpoint || c == Category::kBinarySize || c == Category::kBinaryPresence;
}

bool is_regression(Category c) {
  return c == Category::kRegressionEgoDist || c == Category::kRegressionObjDist ||
         c == Category::kRegressionCenterDist || c == Category::kRegressionSize;
}

bool is_grounding(Category c) { return c == Category::kGrounding2D || c == Category::kGrounding3D; }

bool is_distance(Category c) {
  return c == Category::kRegressionEgoDist || c == Category::kRegressionObjDist ||
         c == Category::kRegressionCenterDist;
}

std::string_view convention_name(Convention c) { return c == Convention::kObb ? "obb" : "aabb"; }

Convention parse_convention(std::string_view name) {
  if (name == "obb") return Convention::kObb;
  if (name == "aabb") return Convention::kAabb;
  throw Error(ErrorCode::kInvalidArgument, "convention must be 'obb' or 'aabb'");
}

std::string format_meters(double meters) { return strprintf("%.2fm", meters); }

std::string choice_text(const Choice& choice) {
  if (const auto* n = std::get_if<std::int64_t>(&choice)) return std::to_string(*n);
  if (const auto* m = std::get_if<double>(&choice)) return format_meters(*m);
  return std::get<std::string>(choice);
}

std::string answer_text(const QARecord& record) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, bool>) {
          return a ? "yes" : "no";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(a);
        } else if constexpr (std::is_same_v<T, ChoiceLetter>) {
          return std::string(1, a.letter);
        } else if constexpr (std::is_same_v<T, Meters>) {
          return format_meters(a.value);
        } else if constexpr (std::is_same_v<T, Box2D>) {
          return box2d_text(a, "%.1f");
        } else {
          const Vec3& c = a.center();
          const Vec3& d = a.dims();
          return strprintf("[%.3f, %.3f, %.3f, %.3f, %.3f, %.3f, %.3f]", c.x(), c.y(), c.z(), d.x(), d.y(),
                           d.z(), a.yaw());
        }
      },
      record.answer);
}

std::string format_depth_call(std::string_view label, const Box2D& box) {
  return "Depth(" + std::string(label) + ", " + box2d_text(box, "%.0f") + ")";
}

std::string cot_text(const QARecord& record) {
  std::string out;
  for (const auto& step : record.cot_steps) {
    out += format_depth_call(step.label, step.box) + " -> " + format_meters(step.depth) + "\n";
  }
  out += "Answer: " + answer_text(record);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

json record_to_json(const QARecord& r) {
  json j;
  j["record_id"] = r.record_id;
  j["video_id"] = r.video_id;
  j["frame_id"] = r.frame_id;
  j["category"] = category_name(r.category);
  j["question"] = r.question;
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, bool>) {
          j["answer"] = a ? "yes" : "no";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          j["answer"] = a;
        } else if constexpr (std::is_same_v<T, ChoiceLetter>) {
          j["answer"] = std::string(1, a.letter);
        } else if constexpr (std::is_same_v<T, Meters>) {
          j["answer"] = format_meters(a.value);
          j["answer_value"] = a.value;
        } else if constexpr (std::is_same_v<T, Box2D>) {
          j["answer"] = box2d_to_json(a);
        } else {
          j["answer"] = box3d_to_json(a);
        }
      },
      r.answer);
  if (!r.choices.empty()) {
    json choices = json::array();
    for (const auto& c : r.choices) {
      std::visit([&](const auto& v) { choices.push_back(v); }, c);
    }
    j["choices"] = std::move(choices);
  }
  if (!r.cot_steps.empty()) {
    json steps = json::array();
    for (const auto& s : r.cot_steps) {
      steps.push_back({{"label", s.label}, {"object_id", s.object_id}, {"box", box2d_to_json(s.box)},
                       {"depth", s.depth}});
    }
    j["cot_steps"] = std::move(steps);
  }
  j["referenced_objects"] = r.referenced_objects;
  j["convention"] = convention_name(r.convention);
  j["scale_factor"] = r.scale_factor;
  return j;
}

QARecord record_from_json(const json& j) {
  try {
    QARecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.video_id = j.at("video_id").get<std::string>();
    r.frame_id = j.at("frame_id").get<std::string>();
    r.category = parse_category(j.at("category").get<std::string>());
    r.question = j.at("question").get<std::string>();
    const json& a = j.at("answer");
    switch (r.category) {
      case Category::kBinaryViewpoint:
      case Category::kBinarySize:
      case Category::kBinaryPresence: {
        const auto s = a.get<std::string>();
        if (s != "yes" && s != "no") throw std::invalid_argument("binary answer must be yes/no");
        r.answer = (s == "yes");
        break;
      }
      case Category::kCounting:
        r.answer = a.get<std::int64_t>();
        break;
      case Category::kMultichoice: {
        const auto s = a.get<std::string>();
        if (s.size() != 1 || s[0] < 'A' || s[0] > 'D') throw std::invalid_argument("choice letter must be A-D");
        r.answer = ChoiceLetter{s[0]};
        break;
      }
      case Category::kRegressionEgoDist:
      case Category::kRegressionObjDist:
      case Category::kRegressionCenterDist:
      case Category::kRegressionSize:
        r.answer = Meters{j.at("answer_value").get<double>()};
        break;
      case Category::kGrounding2D:
        r.answer = box2d_from_json(a);
        break;
      case Category::kGrounding3D:
        r.answer = box3d_from_json(a);
        break;
    }
    if (auto it = j.find("choices"); it != j.end()) {
      for (const json& c : *it) {
        if (c.is_number_integer()) {
          r.choices.emplace_back(c.get<std::int64_t>());
        } else if (c.is_number()) {
          r.choices.emplace_back(c.get<double>());
        } else {
          r.choices.emplace_back(c.get<std::string>());
        }
      }
    }
    if ((r.category == Category::kMultichoice) != (r.choices.size() == 4)) {
      throw std::invalid_argument("choices must be present (4) iff multichoice");
    }
    if (auto it = j.find("cot_steps"); it != j.end()) {
      for (const json& s : *it) {
        r.cot_steps.push_back({s.at("label").get<std::string>(), s.at("object_id").get<std::string>(),
                               box2d_from_json(s.at("box")), s.at("depth").get<double>()});
      }
    }
    r.referenced_objects = j.value("referenced_objects", std::vector<std::string>{});
    r.convention = parse_convention(j.value("convention", std::string("obb")));
    r.scale_factor = j.value("scale_factor", 1.0);
    return r;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaViolation) throw;
    throw Error(ErrorCode::kSchemaViolation, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
}

void write_records(const std::filesystem::path& path, const std::vector<QARecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<QARecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<QARecord> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame context

FrameContext::FrameContext(const Scene& scene, const Frame& frame, const GenerationConfig& config)
    : scene_(scene), frame_(frame), config_(config), vocabulary_(config.vocabulary) {
  for (const auto& o : scene.objects) vocabulary_.push_back(o.label);
  std::sort(vocabulary_.begin(), vocabulary_.end());
  vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
}

const VisibleObject& FrameContext::visible(const std::string& object_id) const {
  for (const auto& v : frame_.visible_objects) {
    if (v.object_id == object_id) return v;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "object '" + object_id + "' is not visible in frame " + frame_.frame_id);
}

const std::string& FrameContext::label(const std::string& object_id) const {
  return scene_.object(object_id).label;
}

std::vector<std::string> FrameContext::visible_labels() const {
  std::vector<std::string> labels;
  for (const auto& v : frame_.visible_objects) labels.push_back(label(v.object_id));
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

OrientedBox3D FrameContext::box(const std::string& object_id) const {
  const OrientedBox3D& obb = visible(object_id).box_camera;
  if (config_.convention == Convention::kObb) return obb;
  const AxisAlignedBox3D aabb = obb_to_aabb(obb);
  return OrientedBox3D(aabb.center(), aabb.extents(), 0.0);
}

const PointCloud& FrameContext::object_cloud(const std::string& object_id) {
  if (auto it = clouds_.find(object_id); it != clouds_.end()) {
    if (it->second.empty()) throw Error(ErrorCode::kEmptyCloud, object_id);
    return it->second;
  }
  const VisibleObject& v = visible(object_id);
  PointCloud cloud;
  if (const DepthMap* depth = frame_.depth_map(DepthSource::kGroundTruth)) {
    try {
      for (const Vec3& p : backproject_depth(*depth, frame_.intrinsics, v.box2d)) {
        if (v.box_camera.contains(p, kCloudMargin)) cloud.push_back(p);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyRegion) throw;
    }
  }
  auto& slot = clouds_[object_id] = std::move(cloud);
  if (slot.empty()) throw Error(ErrorCode::kEmptyCloud, "no depth points on object " + object_id);
  return slot;
}

LabelLookup check_unambiguous(const FrameContext& ctx, const std::string& label) {
  LabelLookup out{LabelStatus::kAbsent, {}};
  for (const auto& v : ctx.frame().visible_objects) {
    if (ctx.label(v.object_id) != label) continue;
    if (out.status == LabelStatus::kUnique) return {LabelStatus::kAmbiguous, {}};
    out = {LabelStatus::kUnique, v.object_id};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

QARecord gen_binary_viewpoint(FrameContext& ctx, const std::string& a, const std::string& b,
                              ViewpointRelation relation, Rng& rng) {
  require_unique(ctx, a);
  require_unique(ctx, b);
  const std::string la = ctx.label(a);
  const std::string lb = ctx.label(b);
  const bool flip = rng.bernoulli(0.5);
  bool answer;
  std::string question;
  if (relation == ViewpointRelation::kLeftRight) {
    const double xa = ctx.visible(a).box2d.center_x();
    const double xb = ctx.visible(b).box2d.center_x();
    if (std::abs(xa - xb) < kPixelTie) throw Error(ErrorCode::kTieSkipped, "2D centers within 2 px");
    static constexpr std::array<std::string_view, 3> kBank = {
        "Is the {a} to the {x} of the {b}?",
        "From this viewpoint, is the {a} on the {x} side of the {b}?",
        "Considering the camera's view, is the {a} positioned {x} of the {b}?",
    };
    const std::string word = flip ? "right" : "left";
    answer = flip ? xa > xb : xa < xb;
    question = fill(pick(kBank, rng), {{'a', la}, {'b', lb}, {'x', word}});
  } else {
    const double da = ctx.visible(a).box_camera.center().norm();
    const double db = ctx.visible(b).box_camera.center().norm();
    if (std::abs(da - db) < kDistanceTie) throw Error(ErrorCode::kTieSkipped, "center distances within 2 cm");
    static constexpr std::array<std::string_view, 3> kBank = {
        "Is the {a} {x} the {b}?",
        "From the camera's perspective, is the {a} {x} the {b}?",
        "Looking at the scene, is the {a} located {x} the {b}?",
    };
    const std::string word = flip ? "behind" : "in front of";
    answer = flip ? da > db : da < db;
    question = fill(pick(kBank, rng), {{'a', la}, {'b', lb}, {'x', word}});
  }
  return base_record(ctx, Category::kBinaryViewpoint, std::move(question), answer, {a, b});
}

QARecord gen_binary_size(FrameContext& ctx, const std::string& a, const std::string& b, SizeDimension dim,
                         Rng& rng) {
  require_unique(ctx, a);
  require_unique(ctx, b);
  const double va = dimension_value(ctx.box(a), dim);
  const double vb = dimension_value(ctx.box(b), dim);
  if (std::abs(va - vb) < kSizeTieRelative * std::max(va, vb)) {
    throw Error(ErrorCode::kTieSkipped, "sizes within 5%");
  }
  static constexpr std::array<std::string_view, 3> kBank = {
      "Is the {a} {x} in {l} than the {b}?",
      "Does the {a} have a {x} {l} than the {b}?",
      "Comparing {l}, is the {a} {x} than the {b}?",
  };
  const bool smaller = rng.bernoulli(0.5);
  const bool answer = smaller ? va < vb : va > vb;
  std::string question = fill(pick(kBank, rng), {{'a', ctx.label(a)},
                                                 {'b', ctx.label(b)},
                                                 {'l', std::string(dimension_noun(dim))},
                                                 {'x', smaller ? "smaller" : "larger"}});
  return base_record(ctx, Category::kBinarySize, std::move(question), answer, {a, b});
}

std::pair<QARecord, QARecord> gen_binary_presence(FrameContext& ctx, const std::string& label, Rng& rng) {
  const std::vector<std::string> present = ctx.visible_labels();
  if (std::find(present.begin(), present.end(), label) == present.end()) {
    throw Error(ErrorCode::kInvalidArgument, "label '" + label + "' is not visible");
  }
  const std::vector<std::string> absent = labels_excluding(ctx.vocabulary(), present);
  if (absent.empty()) throw Error(ErrorCode::kNoNegativeAvailable, "every vocabulary label is visible");
  static constexpr std::array<std::string_view, 3> kBank = {
      "Is there a {l} in the image?",
      "Is a {l} present in the image?",
      "Can you see a {l} in this image?",
  };
  const std::string negative = absent[rng.index(absent.size())];
  std::vector<std::string> refs;
  for (const auto& v : ctx.frame().visible_objects) {
    if (ctx.label(v.object_id) == label) refs.push_back(v.object_id);
  }
  QARecord pos = base_record(ctx, Category::kBinaryPresence, fill(pick(kBank, rng), {{'l', label}}), true,
                             std::move(refs));
  QARecord neg = base_record(ctx, Category::kBinaryPresence, fill(pick(kBank, rng), {{'l', negative}}),
                             false, {});
  return {std::move(pos), std::move(neg)};
}

QARecord gen_counting(FrameContext& ctx, const std::string& label, Rng& rng) {
  std::vector<std::string> refs;
  for (const auto& v : ctx.frame().visible_objects) {
    if (ctx.label(v.object_id) == label) refs.push_back(v.object_id);
  }
  static constexpr std::array<std::string_view, 3> kBank = {
      "How many {l} are in the image?",
      "Count the number of {l} visible in the image.",
      "How many {l} can you see?",
  };
  const auto count = static_cast<std::int64_t>(refs.size());
  return base_record(ctx, Category::kCounting, fill(pick(kBank, rng), {{'l', plural(label)}}), count,
                     std::move(refs));
}

QARecord gen_regression(FrameContext& ctx, RegressionKind kind, const std::vector<std::string>& refs,
                        SizeDimension dim, Rng& rng) {
  const bool pair = kind == RegressionKind::kObjectDistance || kind == RegressionKind::kCenterDistance;
  if (refs.size() != (pair ? 2u : 1u)) throw Error(ErrorCode::kInvalidArgument, "wrong number of objects");
  for (const auto& id : refs) require_unique(ctx, id);
  const std::string la = ctx.label(refs[0]);
  const std::string lb = pair ? ctx.label(refs[1]) : std::string();
  if (pair && ctx.config().distance_overlap_rejection &&
      iou_3d_yaw(ctx.visible(refs[0]).box_camera, ctx.visible(refs[1]).box_camera) > 0.0) {
    throw Error(ErrorCode::kOverlapRejected, refs[0] + " overlaps " + refs[1]);
  }

  Category category;
  double value;
  std::string question;
  switch (kind) {
    case RegressionKind::kEgoDistance: {
      static constexpr std::array<std::string_view, 3> kBank = {
          "How far away is the {a} from the camera?",
          "What is the distance between the camera and the {a}?",
          "How far is the {a} from the viewer?",
      };
      category = Category::kRegressionEgoDist;
      value = egocentric_distance(ctx.object_cloud(refs[0]));
      question = fill(pick(kBank, rng), {{'a', la}});
      break;
    }
    case RegressionKind::kObjectDistance: {
      static constexpr std::array<std::string_view, 3> kBank = {
          "How far apart are the {a} and the {b}?",
          "What is the minimum distance between the {a} and the {b}?",
          "What is the gap between the {a} and the {b}?",
      };
      category = Category::kRegressionObjDist;
      const PointCloud& ca = ctx.object_cloud(refs[0]);
      value = min_cloud_distance(ca, ctx.object_cloud(refs[1]));
      question = fill(pick(kBank, rng), {{'a', la}, {'b', lb}});
      break;
    }
    case RegressionKind::kCenterDistance: {
      static constexpr std::array<std::string_view, 3> kBank = {
          "What is the distance between the centers of the {a} and the {b}?",
          "How far is the center of the {a} from the center of the {b}?",
          "Measuring center to center, how far apart are the {a} and the {b}?",
      };
      category = Category::kRegressionCenterDist;
      value = center_distance(ctx.box(refs[0]), ctx.box(refs[1]));
      question = fill(pick(kBank, rng), {{'a', la}, {'b', lb}});
      break;
    }
    case RegressionKind::kSize:
    default: {
      static constexpr std::array<std::string_view, 3> kBank = {
          "How {x} is the {a}?",
          "What is the {l} of the {a}?",
          "Estimate the {l} of the {a}.",
      };
      category = Category::kRegressionSize;
      value = dimension_value(ctx.box(refs[0]), dim);
      question = fill(pick(kBank, rng), {{'a', la},
                                         {'l', std::string(dimension_noun(dim))},
                                         {'x', std::string(dimension_adjective(dim))}});
      break;
    }
  }
  return base_record(ctx, category, std::move(question), Meters{value}, refs);
}

QARecord gen_grounding_2d(FrameContext& ctx, const std::string& object_id, Rng& rng) {
  require_unique(ctx, object_id);
  static constexpr std::array<std::string_view, 3> kBank = {
      "Provide the 2D bounding box of the {a}.",
      "Where is the {a} in the image? Answer with a 2D bounding box.",
      "Output the bounding box [x_min, y_min, x_max, y_max] of the {a}.",
  };
  const Box2D box = project_box_to_2d(ctx.visible(object_id).box_camera, ctx.frame().intrinsics, true);
  return base_record(ctx, Category::kGrounding2D, fill(pick(kBank, rng), {{'a', ctx.label(object_id)}}), box,
                     {object_id});
}

QARecord gen_grounding_3d(FrameContext& ctx, const std::string& object_id, Rng& rng) {
  require_unique(ctx, object_id);
  static constexpr std::array<std::string_view, 3> kBank = {
      "Provide the 3D bounding box of the {a}.",
      "Output the 3D box (center, dimensions, yaw) of the {a} in camera coordinates.",
      "Where is the {a} in 3D? Answer with center, dimensions and yaw.",
  };
  return base_record(ctx, Category::kGrounding3D, fill(pick(kBank, rng), {{'a', ctx.label(object_id)}}),
                     ctx.box(object_id), {object_id});
}

namespace {

QARecord finish_multichoice(const QARecord& base, std::vector<Choice> options, Rng& rng) {
  // options[0] is the correct one before shuffling.
  std::vector<std::size_t> order{0, 1, 2, 3};
  rng.shuffle(order);
  QARecord r = base;
  r.category = Category::kMultichoice;
  r.cot_steps.clear();
  r.choices.clear();
  std::string listing;
  for (std::size_t i = 0; i < 4; ++i) {
    r.choices.push_back(options[order[i]]);
    if (order[i] == 0) r.answer = ChoiceLetter{static_cast<char>('A' + i)};
    listing += (i ? " (" : "(") + letter_of(i) + ") " + choice_text(options[order[i]]);
  }
  r.question = base.question + " Options: " + listing;
  return r;
}

}  // namespace

QARecord gen_multichoice(const QARecord& base, Rng& rng) {
  std::vector<Choice> options;
  if (base.category == Category::kCounting) {
    const std::int64_t gt = std::get<std::int64_t>(base.answer);
    options.emplace_back(gt);
    if (gt != 0) options.emplace_back(std::int64_t{0});
    std::vector<std::int64_t> pool;
    for (std::int64_t k = gt - 3; k <= gt + 3; ++k) {
      if (k > 0 && k != gt) pool.push_back(k);
    }
    rng.shuffle(pool);
    for (std::size_t i = 0; options.size() < 4 && i < pool.size(); ++i) options.emplace_back(pool[i]);
  } else if (is_regression(base.category)) {
    const double gt = std::get<Meters>(base.answer).value;
    const double step = std::max(kDistractorFraction * gt, kDistractorFloor);
    options.emplace_back(gt);
    // Offsets -1, +1, +2; a non-positive candidate is replaced by the next
    // offset upwards.
    for (int k : {-1, 1, 2, 3, 4}) {
      if (options.size() == 4) break;
      const double candidate = gt + k * step;
      if (candidate > 0.0) options.emplace_back(candidate);
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "multichoice needs a counting or regression base, got " + std::string(category_name(base.category)));
  }
  if (options.size() < 4) throw Error(ErrorCode::kInsufficientDistractors, base.record_id);
  return finish_multichoice(base, std::move(options), rng);
}

QARecord gen_referring(FrameContext& ctx, const std::string& object_id, Rng& rng) {
  require_unique(ctx, object_id);
  const std::string& label = ctx.label(object_id);
  std::vector<std::string> wrong = labels_excluding(ctx.vocabulary(), {label});
  if (wrong.size() < 3) throw Error(ErrorCode::kInsufficientDistractors, "vocabulary has fewer than 4 labels");
  rng.shuffle(wrong);
  static constexpr std::array<std::string_view, 3> kBank = {
      "Which object is inside the box {x}?",
      "What is the object located at {x}?",
      "Name the object in the region {x}.",
  };
  const std::string where = box2d_text(ctx.visible(object_id).box2d, "%.0f");
  QARecord base = base_record(ctx, Category::kMultichoice, fill(pick(kBank, rng), {{'x', where}}),
                              ChoiceLetter{'A'}, {object_id});
  return finish_multichoice(base, {label, wrong[0], wrong[1], wrong[2]}, rng);
}

QARecord build_cot_sequence(const QARecord& record, const FrameContext& ctx, DepthSource source) {
  if (record.category != Category::kBinaryViewpoint && !is_regression(record.category)) {
    throw Error(ErrorCode::kInvalidArgument, "CoT applies to front/behind and regression records");
  }
  const DepthMap* depth = ctx.frame().depth_map(source);
  QARecord out = record;
  out.cot_steps.clear();
  for (const auto& id : record.referenced_objects) {
    const Box2D& b = ctx.visible(id).box2d;
    const Box2D box(std::round(b.x_min), std::round(b.y_min), std::round(b.x_max), std::round(b.y_max));
    const std::optional<double> median = depth ? median_depth(*depth, box) : std::nullopt;
    if (!median) {
      throw Error(ErrorCode::kEmptyDepthRegion,
                  "no valid " + std::string(depth_source_name(source)) + " depth for " + id);
    }
    out.cot_steps.push_back({ctx.label(id), id, box, *median});
  }
  return out;
}

double sample_scale_factor(Rng& rng, std::pair<double, double> range) {
  return rng.uniform(range.first, range.second);
}

std::vector<QARecord> apply_scale_augmentation(const std::vector<QARecord>& records, double factor) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be >= 1");
  }
  std::vector<QARecord> out = records;
  for (auto& r : out) {
    if (!is_distance(r.category)) continue;
    std::get<Meters>(r.answer).value *= factor;
    for (auto& s : r.cot_steps) s.depth *= factor;
    r.scale_factor *= factor;
  }
  return out;
}

MultiviewPrompt assemble_multiview_prompt(const QARecord& record, const Frame& reference,
                                          const std::vector<const Frame*>& support) {
  MultiviewPrompt prompt;
  auto add_view = [&](const Frame& f) {
    const json view = {{"intrinsics", intrinsics_to_json(f.intrinsics)},
                       {"relative_pose", relative_pose(reference, f).to_row_major()}};
    prompt.text += "<image>\n" + view.dump() + "\n";
    prompt.images.push_back(f.image);
  };
  for (const Frame* f : support) add_view(*f);
  add_view(reference);
  prompt.text += record.question;
  return prompt;
}

// ---------------------------------------------------------------------------
// Pipeline

void GenerationStats::merge(const GenerationStats& other) {
  for (const auto& [c, n] : other.emitted) emitted[c] += n;
  for (const auto& [k, n] : other.skipped) skipped[k] += n;
}

namespace {

std::uint64_t record_seed(const GenerationConfig& config, const Frame& frame, const Scene& scene,
                          Category category, std::int64_t ordinal, std::string_view stream) {
  return StableHash()
      .add(config.seed)
      .add(scene.video_id)
      .add(frame.frame_id)
      .add(category_name(category))
      .add(ordinal)
      .add(stream)
      .value();
}

class CategoryRun {
 public:
  CategoryRun(FrameContext& ctx, Category category, GenerationStats& stats)
      : ctx_(ctx), category_(category), stats_(stats), cap_(static_cast<std::size_t>(
                                                            std::max(0, ctx.config().max_questions_per_frame_per_category))) {}

  Rng selection_rng() const { return Rng(record_seed(ctx_.config(), ctx_.frame(), ctx_.scene(), category_, -1, "select")); }
  Rng attempt_rng() { return Rng(record_seed(ctx_.config(), ctx_.frame(), ctx_.scene(), category_, attempt_++, "record")); }

  bool full(std::size_t extra = 1) const { return records_.size() + extra > cap_; }

  // Runs one candidate; generator errors are counted and skipped.
  template <typename Fn>
  void attempt(Fn&& fn) {
    Rng rng = attempt_rng();
    try {
      for (QARecord& r : fn(rng)) records_.push_back(std::move(r));
    } catch (const Error& e) {
      ++stats_.skipped[std::string(error_code_name(e.code()))];
    }
  }

  std::vector<QARecord> take() { return std::move(records_); }
  FrameContext& ctx() { return ctx_; }

 private:
  FrameContext& ctx_;
  Category category_;
  GenerationStats& stats_;
  std::size_t cap_;
  std::int64_t attempt_ = 0;
  std::vector<QARecord> records_;
};

std::vector<std::string> unique_objects(const FrameContext& ctx) {
  std::vector<std::string> out;
  for (const auto& v : ctx.frame().visible_objects) {
    if (check_unambiguous(ctx, ctx.label(v.object_id)).status == LabelStatus::kUnique) {
      out.push_back(v.object_id);
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> unique_pairs(const FrameContext& ctx) {
  const auto ids = unique_objects(ctx);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) out.emplace_back(ids[i], ids[j]);
  }
  return out;
}

QARecord with_cot(const QARecord& r, const FrameContext& ctx) {
  return build_cot_sequence(r, ctx, ctx.config().depth_source_for_cot);
}

// Front/behind records must read consistently: the CoT depth order has to
// agree with the center-distance answer.
QARecord with_front_behind_cot(const QARecord& r, const FrameContext& ctx) {
  QARecord out = with_cot(r, ctx);
  const double da = ctx.visible(r.referenced_objects[0]).box_camera.center().norm();
  const double db = ctx.visible(r.referenced_objects[1]).box_camera.center().norm();
  const double ma = out.cot_steps[0].depth;
  const double mb = out.cot_steps[1].depth;
  if (ma == mb || (ma < mb) != (da < db)) {
    throw Error(ErrorCode::kInconsistentCot, "median depth order disagrees with center distances");
  }
  return out;
}

SizeDimension random_dimension(Rng& rng) { return static_cast<SizeDimension>(rng.index(3)); }

void run_category(CategoryRun& run, Category category) {
  FrameContext& ctx = run.ctx();
  Rng select = run.selection_rng();
  using Records = std::vector<QARecord>;

  switch (category) {
    case Category::kBinaryViewpoint:
    case Category::kBinarySize: {
      auto pairs = unique_pairs(ctx);
      select.shuffle(pairs);
      for (const auto& [a0, b0] : pairs) {
        if (run.full()) break;
        run.attempt([&](Rng& rng) -> Records {
          const bool swap = rng.bernoulli(0.5);
          const std::string& a = swap ? b0 : a0;
          const std::string& b = swap ? a0 : b0;
          if (category == Category::kBinarySize) return {gen_binary_size(ctx, a, b, random_dimension(rng), rng)};
          const auto relation = rng.bernoulli(0.5) ? ViewpointRelation::kFrontBehind : ViewpointRelation::kLeftRight;
          QARecord r = gen_binary_viewpoint(ctx, a, b, relation, rng);
          if (relation == ViewpointRelation::kFrontBehind) r = with_front_behind_cot(r, ctx);
          return {r};
        });
      }
      break;
    }
    case Category::kBinaryPresence: {
      auto labels = ctx.visible_labels();
      select.shuffle(labels);
      for (const auto& label : labels) {
        if (run.full(2)) break;
        run.attempt([&](Rng& rng) -> Records {
          auto [pos, neg] = gen_binary_presence(ctx, label, rng);
          return {pos, neg};
        });
      }
      break;
    }
    case Category::kCounting: {
      auto labels = ctx.visible_labels();
      select.shuffle(labels);
      const auto absent = labels_excluding(ctx.vocabulary(), ctx.visible_labels());
      for (const auto& label : labels) {
        if (run.full()) break;
        run.attempt([&](Rng& rng) -> Records { return {gen_counting(ctx, label, rng)}; });
        if (run.full() || absent.empty()) continue;
        run.attempt([&](Rng& rng) -> Records {
          return {gen_counting(ctx, absent[rng.index(absent.size())], rng)};
        });
      }
      break;
    }
    case Category::kRegressionEgoDist:
    case Category::kRegressionSize:
    case Category::kGrounding2D:
    case Category::kGrounding3D: {
      auto ids = unique_objects(ctx);
      select.shuffle(ids);
      for (const auto& id : ids) {
        if (run.full()) break;
        run.attempt([&](Rng& rng) -> Records {
          if (category == Category::kGrounding2D) return {gen_grounding_2d(ctx, id, rng)};
          if (category == Category::kGrounding3D) return {gen_grounding_3d(ctx, id, rng)};
          if (category == Category::kRegressionEgoDist) {
            return {with_cot(gen_regression(ctx, RegressionKind::kEgoDistance, {id}, SizeDimension::kWidth, rng), ctx)};
          }
          const SizeDimension dim = random_dimension(rng);
          return {with_cot(gen_regression(ctx, RegressionKind::kSize, {id}, dim, rng), ctx)};
        });
      }
      break;
    }
    case Category::kRegressionObjDist:
    case Category::kRegressionCenterDist: {
      auto pairs = unique_pairs(ctx);
      select.shuffle(pairs);
      const auto kind = category == Category::kRegressionObjDist ? RegressionKind::kObjectDistance
                                                                 : RegressionKind::kCenterDistance;
      for (const auto& [a0, b0] : pairs) {
        if (run.full()) break;
        run.attempt([&](Rng& rng) -> Records {
          const bool swap = rng.bernoulli(0.5);
          std::vector<std::string> refs = swap ? std::vector{b0, a0} : std::vector{a0, b0};
          return {with_cot(gen_regression(ctx, kind, refs, SizeDimension::kWidth, rng), ctx)};
        });
      }
      break;
    }
    case Category::kMultichoice: {
      // Candidate bases: (kind tag, objects).
      struct Base {
        char kind;  // c: counting, e: ego, s: size, o: object dist, m: center dist, r: referring
        std::vector<std::string> refs;
      };
      std::vector<Base> bases;
      for (const auto& label : ctx.visible_labels()) bases.push_back({'c', {label}});
      for (const auto& id : unique_objects(ctx)) {
        bases.push_back({'e', {id}});
        bases.push_back({'s', {id}});
        bases.push_back({'r', {id}});
      }
      for (const auto& [a, b] : unique_pairs(ctx)) {
        bases.push_back({'o', {a, b}});
        bases.push_back({'m', {a, b}});
      }
      select.shuffle(bases);
      for (const Base& base : bases) {
        if (run.full()) break;
        run.attempt([&](Rng& rng) -> Records {
          switch (base.kind) {
            case 'c': return {gen_multichoice(gen_counting(ctx, base.refs[0], rng), rng)};
            case 'r': return {gen_referring(ctx, base.refs[0], rng)};
            case 'e':
              return {gen_multichoice(
                  gen_regression(ctx, RegressionKind::kEgoDistance, base.refs, SizeDimension::kWidth, rng), rng)};
            case 's': {
              const SizeDimension dim = random_dimension(rng);
              return {gen_multichoice(gen_regression(ctx, RegressionKind::kSize, base.refs, dim, rng), rng)};
            }
            case 'o':
              return {gen_multichoice(
                  gen_regression(ctx, RegressionKind::kObjectDistance, base.refs, SizeDimension::kWidth, rng), rng)};
            default:
              return {gen_multichoice(
                  gen_regression(ctx, RegressionKind::kCenterDistance, base.refs, SizeDimension::kWidth, rng), rng)};
          }
        });
      }
      break;
    }
  }
}

}  // namespace

std::vector<QARecord> generate_frame_records(const Scene& full_scene, const Frame& frame,
                                             const GenerationConfig& config, GenerationStats* stats) {
  GenerationStats local;
  FrameContext ctx(full_scene, frame, config);
  std::vector<QARecord> out;
  for (Category category : kAllCategories) {
    if (!config.categories.count(category)) continue;
    CategoryRun run(ctx, category, local);
    run_category(run, category);
    std::vector<QARecord> records = run.take();
    const std::string prefix =
        full_scene.video_id + "/" + frame.frame_id + "/" + std::string(category_name(category)) + "/";
    for (std::size_t i = 0; i < records.size(); ++i) records[i].record_id = prefix + std::to_string(i);

    std::vector<QARecord> augmented;
    if (config.scale_aug && is_distance(category)) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        Rng rng(record_seed(config, frame, full_scene, category, static_cast<std::int64_t>(i), "scale"));
        QARecord r = apply_scale_augmentation({records[i]}, sample_scale_factor(rng, *config.scale_aug)).front();
        r.record_id += "/scaled";
        augmented.push_back(std::move(r));
      }
    }
    local.emitted[category] += records.size() + augmented.size();
    std::move(records.begin(), records.end(), std::back_inserter(out));
    std::move(augmented.begin(), augmented.end(), std::back_inserter(out));
  }
  if (stats) stats->merge(local);
  return out;
}

std::vector<QARecord> generate_dataset(const std::vector<Scene>& scenes, const GenerationConfig& config,
                                       int jobs, GenerationStats* stats) {
  if (config.scale_aug) {
    const auto [lo, hi] = *config.scale_aug;
    if (!(lo >= 1.0 && hi >= lo)) throw Error(ErrorCode::kInvalidArgument, "scale_aug range must satisfy 1 <= lo <= hi");
  }
  if (config.max_questions_per_frame_per_category < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_questions_per_frame_per_category must be >= 0");
  }
  std::vector<std::pair<const Scene*, const Frame*>> work;
  std::vector<Scene> sampled;
  sampled.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    sampled.push_back(config.target_fps >= scene.fps ? scene : subsample_frames(scene, config.target_fps));
  }
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (const Frame& f : sampled[s].frames) work.emplace_back(&scenes[s], &f);
  }
  std::vector<std::vector<QARecord>> per_frame(work.size());
  std::vector<GenerationStats> per_stats(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    per_frame[i] = generate_frame_records(*work[i].first, *work[i].second, config, &per_stats[i]);
  });
  std::vector<QARecord> out;
  for (std::size_t i = 0; i < work.size(); ++i) {
    std::move(per_frame[i].begin(), per_frame[i].end(), std::back_inserter(out));
    if (stats) stats->merge(per_stats[i]);
  }
  return out;
}

}  // namespace svf
