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

// Eigen must precede httplib: <resolv.h> defines _res.
#include "svf/blind_filter.hpp"
#include "svf/error.hpp"

#include <httplib.h>

namespace svf {

namespace {

void set_timeouts(httplib::Client& client, double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto micros = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);
}

}  // namespace

HttpJudge::HttpJudge(std::string judge_id, std::string url, double timeout_seconds, int retries)
    : JudgeClient(std::move(judge_id)), timeout_seconds_(timeout_seconds), retries_(retries) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
    throw Error(ErrorCode::kInvalidArgument, "judge URL must be http://host[:port][/path], got '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  scheme_host_port_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (!(timeout_seconds > 0)) throw Error(ErrorCode::kInvalidArgument, "judge timeout must be positive");
}

std::string HttpJudge::ask(const QARecord& record) {
  httplib::Client client(scheme_host_port_);
  set_timeouts(client, timeout_seconds_);
  const std::string body = blind_query_to_json(blind_query(record)).dump();
  bool timed_out = false;
  std::string last_error;
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      timed_out = false;
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kJudgeUnreachable, judge_id() + ": HTTP " + std::to_string(res->status));
    }
    // A reply without a usable "answer" is returned verbatim and will fail
    // answer parsing, which counts as an incorrect verdict.
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("answer").get<std::string>();
    } catch (const std::exception&) {
      return res->body;
    }
  }
  throw Error(timed_out ? ErrorCode::kJudgeTimeout : ErrorCode::kJudgeUnreachable,
              judge_id() + " at " + scheme_host_port_ + path_ + ": " + last_error);
}

}  // namespace svf
