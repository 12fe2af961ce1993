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

#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "svf/depth_map.hpp"
#include "svf/geometry.hpp"
#include "svf/scene.hpp"

namespace svf {

// A `Depth(<label>, [a, b, c, d]) ->` call found at the end of a generation
// stream. [span_begin, span_end) covers the call text.
struct ToolCall {
  std::string label;
  Box2D box;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
};

// Recognizes the call grammar at the end of `text` (trailing whitespace
// allowed). Whitespace around tokens may vary; nothing else may. Throws
// MalformedCall when the text ends in `Depth(label, [...]) ->` but the
// bracket does not hold four numbers forming a box.
std::optional<ToolCall> parse_tool_call(std::string_view text);

struct LoggedCall {
  ToolCall call;
  std::optional<double> meters;  // nullopt: no valid depth in the box
};

struct ToolSession {
  std::string session_id;
  std::string frame_id;
  DepthSource source = DepthSource::kGroundTruth;
  DepthMap depth;
  std::vector<LoggedCall> log;
};

// Median depth in the call's box (clamped to the image), using the same rule
// as CoT generation. Logs the call either way; throws EmptyDepthRegion when
// the box holds no valid depth.
double answer_call(ToolSession& session, const ToolCall& call);

// Text spliced after a call: "2.00m", or "unknown" for an empty region.
std::string splice_text(const std::optional<double>& meters);

struct TranscriptSegment {
  std::string text;
  bool spliced = false;
};

struct ToolTranscript {
  std::vector<TranscriptSegment> segments;
  std::vector<LoggedCall> calls;

  std::string text() const;
  // Concatenation of the model's own segments.
  std::string raw_emission() const;
};

// Receives the transcript so far and returns the next chunk. A model stops a
// chunk right after `->` to request a tool result; an empty chunk ends the
// generation.
using GenerationCallback = std::function<std::string(const std::string& transcript)>;

inline constexpr int kDefaultMaxCalls = 8;

// Alternates generation and call answering until the transcript has an
// `Answer:` line or the model stops. Throws CallBudgetExceeded on call number
// max_calls + 1, and MalformedCall from parsing.
ToolTranscript run_tool_loop(const GenerationCallback& model, ToolSession& session,
                             int max_calls = kDefaultMaxCalls);

// Line-JSON protocol over frames of loaded scenes:
//   {"op": "open_session", "frame_id", "depth_source", ["video_id"]} -> {"session_id"}
//   {"op": "call", "session_id", "label", "box": [4]} -> {"depth_m"}
//   {"op": "close", "session_id"} -> {"closed": true}
// Failures answer {"error": text, "code": ErrorCode name} and leave the
// service running. Sessions are independent and may be used concurrently.
class DepthService {
 public:
  explicit DepthService(std::vector<Scene> scenes);
  nlohmann::json handle(const nlohmann::json& request);
  // One request per line; one response per line. Returns at end of input.
  void serve_stream(std::istream& in, std::ostream& out);
  std::size_t open_sessions() const;

 private:
  struct Slot {
    std::mutex mu;
    ToolSession session;
  };
  nlohmann::json open_session(const nlohmann::json& request);
  nlohmann::json call(const nlohmann::json& request);
  nlohmann::json close(const nlohmann::json& request);
  std::shared_ptr<Slot> find(const nlohmann::json& request) const;

  std::vector<Scene> scenes_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::size_t next_id_ = 1;
};

// HTTP transport: POST /rpc with a request body, JSON response.
class DepthHttpServer {
 public:
  explicit DepthHttpServer(DepthService& service);
  ~DepthHttpServer();
  DepthHttpServer(const DepthHttpServer&) = delete;
  DepthHttpServer& operator=(const DepthHttpServer&) = delete;
  // Binds (port 0 picks a free one) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace svf
