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

#include "svf/depth_tool.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>

#include "svf/error.hpp"
#include "svf/strings.hpp"

namespace svf {

using nlohmann::json;

namespace {

// Anchored at a "Depth(" occurrence and run to the end of the stream.
const std::regex& call_pattern() {
  static const std::regex re(R"(Depth\(\s*([^,()\[\]]*?)\s*,\s*\[([^\]]*)\]\s*\)\s*->\s*)");
  return re;
}

std::optional<double> parse_number(const std::string& token) {
  const std::string t(trim(token));
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

Box2D parse_box(const std::string& inner, const std::string& call_text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = inner.find(',', start);
    const auto v = parse_number(inner.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!v) throw Error(ErrorCode::kMalformedCall, "box is not numeric in '" + call_text + "'");
    values.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.size() != 4) {
    throw Error(ErrorCode::kMalformedCall,
                strprintf("box needs 4 numbers, got %zu in '%s'", values.size(), call_text.c_str()));
  }
  if (values[0] > values[2] || values[1] > values[3]) {
    throw Error(ErrorCode::kMalformedCall, "box corners out of order in '" + call_text + "'");
  }
  return Box2D(values[0], values[1], values[2], values[3]);
}

bool has_answer_line(const std::string& text) {
  static const std::regex re(R"((^|\n)[ \t]*Answer:)");
  return std::regex_search(text, re);
}

}  // namespace

std::optional<ToolCall> parse_tool_call(std::string_view text) {
  const std::size_t begin = text.rfind("Depth(");
  if (begin == std::string_view::npos) return std::nullopt;
  const std::string tail(text.substr(begin));
  std::smatch m;
  if (!std::regex_match(tail, m, call_pattern())) return std::nullopt;
  std::size_t end = text.size();
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  const std::string call_text(text.substr(begin, end - begin));
  const std::string label = m[1].str();
  if (label.empty()) throw Error(ErrorCode::kMalformedCall, "empty label in '" + call_text + "'");
  return ToolCall{label, parse_box(m[2].str(), call_text), begin, end};
}

double answer_call(ToolSession& session, const ToolCall& call) {
  const auto median = median_depth(session.depth, call.box);
  session.log.push_back({call, median});
  if (!median) {
    throw Error(ErrorCode::kEmptyDepthRegion,
                strprintf("no valid %s depth for '%s' in frame %s", std::string(depth_source_name(session.source)).c_str(),
                          call.label.c_str(), session.frame_id.c_str()));
  }
  return *median;
}

std::string splice_text(const std::optional<double>& meters) {
  return meters ? strprintf("%.2fm", *meters) : std::string("unknown");
}

std::string ToolTranscript::text() const {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

std::string ToolTranscript::raw_emission() const {
  std::string out;
  for (const auto& s : segments) {
    if (!s.spliced) out += s.text;
  }
  return out;
}

ToolTranscript run_tool_loop(const GenerationCallback& model, ToolSession& session, int max_calls) {
  ToolTranscript transcript;
  std::string text;
  int calls = 0;
  while (!has_answer_line(text)) {
    std::string chunk = model(text);
    if (chunk.empty()) break;
    text += chunk;
    transcript.segments.push_back({std::move(chunk), false});
    if (has_answer_line(text)) break;
    const auto call = parse_tool_call(text);
    if (!call) continue;
    if (++calls > max_calls) {
      throw Error(ErrorCode::kCallBudgetExceeded, strprintf("model issued more than %d depth calls", max_calls));
    }
    std::optional<double> meters;
    try {
      meters = answer_call(session, *call);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyDepthRegion) throw;
    }
    std::string splice = splice_text(meters);
    if (!std::isspace(static_cast<unsigned char>(text.back()))) splice.insert(0, " ");
    text += splice;
    transcript.segments.push_back({std::move(splice), true});
    transcript.calls.push_back(session.log.back());
  }
  return transcript;
}

// ---------------------------------------------------------------------------
// Service

DepthService::DepthService(std::vector<Scene> scenes) : scenes_(std::move(scenes)) {}

std::size_t DepthService::open_sessions() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json DepthService::handle(const json& request) {
  try {
    const std::string op = request.at("op").get<std::string>();
    if (op == "open_session") return open_session(request);
    if (op == "call") return call(request);
    if (op == "close") return close(request);
    throw Error(ErrorCode::kInvalidArgument, "unknown op '" + op + "'");
  } catch (const Error& e) {
    return {{"error", e.what()}, {"code", error_code_name(e.code())}};
  } catch (const json::exception& e) {
    return {{"error", std::string("malformed request: ") + e.what()},
            {"code", error_code_name(ErrorCode::kSchemaViolation)}};
  }
}

json DepthService::open_session(const json& request) {
  const std::string frame_id = request.at("frame_id").get<std::string>();
  const DepthSource source = parse_depth_source(request.value("depth_source", std::string("gt")));
  const std::string video_id = request.value("video_id", std::string());
  const Frame* found = nullptr;
  for (const Scene& scene : scenes_) {
    if (!video_id.empty() && scene.video_id != video_id) continue;
    if (const Frame* f = scene.find_frame(frame_id)) {
      if (found) throw Error(ErrorCode::kInvalidArgument, "frame '" + frame_id + "' exists in several videos; pass video_id");
      found = f;
    }
  }
  if (!found) throw Error(ErrorCode::kUnknownFrame, "no frame '" + frame_id + "'");
  const DepthMap* depth = found->depth_map(source);
  if (!depth) {
    throw Error(ErrorCode::kMissingFile,
                "frame '" + frame_id + "' has no " + std::string(depth_source_name(source)) + " depth");
  }
  auto slot = std::make_shared<Slot>();
  slot->session.frame_id = frame_id;
  slot->session.source = source;
  slot->session.depth = *depth;
  std::lock_guard lock(mu_);
  slot->session.session_id = "s" + std::to_string(next_id_++);
  sessions_[slot->session.session_id] = slot;
  return {{"session_id", slot->session.session_id}};
}

std::shared_ptr<DepthService::Slot> DepthService::find(const json& request) const {
  const std::string id = request.at("session_id").get<std::string>();
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
  return it->second;
}

json DepthService::call(const json& request) {
  const auto slot = find(request);
  const json& box = request.at("box");
  if (!box.is_array() || box.size() != 4) throw Error(ErrorCode::kMalformedCall, "box must hold 4 numbers");
  ToolCall c{request.at("label").get<std::string>(),
             Box2D(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>())};
  std::lock_guard lock(slot->mu);
  return {{"depth_m", answer_call(slot->session, c)}};
}

json DepthService::close(const json& request) {
  const auto slot = find(request);
  std::lock_guard lock(mu_);
  sessions_.erase(slot->session.session_id);
  return {{"closed", true}};
}

void DepthService::serve_stream(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json response;
    try {
      response = handle(json::parse(line));
    } catch (const json::parse_error& e) {
      response = {{"error", std::string("malformed request: ") + e.what()},
                  {"code", error_code_name(ErrorCode::kSchemaViolation)}};
    }
    out << response.dump() << '\n' << std::flush;
  }
}

}  // namespace svf
