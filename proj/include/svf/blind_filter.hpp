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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "svf/qa.hpp"

namespace svf {

// What a judge is allowed to see: the question text and, for multichoice,
// the options. Never the image or the answer.
struct BlindQuery {
  std::string record_id;
  std::string question;
  std::vector<std::string> choices;
};
BlindQuery blind_query(const QARecord& record);
nlohmann::json blind_query_to_json(const BlindQuery& query);

class JudgeClient {
 public:
  explicit JudgeClient(std::string judge_id) : judge_id_(std::move(judge_id)) {}
  virtual ~JudgeClient() = default;
  const std::string& judge_id() const { return judge_id_; }
  // Raw reply text. Mock judges read the record to simulate their policy;
  // remote judges send only blind_query(record). Throws JudgeTimeout or
  // JudgeUnreachable.
  virtual std::string ask(const QARecord& record) = 0;

 private:
  std::string judge_id_;
};

enum class MockPolicy { kAlwaysCorrect, kAlwaysWrong, kMajorityClass, kSeededRandom };

// Deterministic local judge. majority_class answers, per category, the most
// frequent training answer (the median for regression); seeded_random answers
// correctly with probability p, decided per record from hash(seed, judge,
// record).
class MockJudge : public JudgeClient {
 public:
  MockJudge(std::string judge_id, MockPolicy policy, double p = 0.5, std::uint64_t seed = 0,
            const std::vector<QARecord>& training = {});
  std::string ask(const QARecord& record) override;

 private:
  MockPolicy policy_;
  double p_;
  std::uint64_t seed_;
  std::map<Category, std::string> majority_;
};

// POSTs blind_query_to_json to the URL and expects {"answer": "..."}. Two
// retries on transport failure, then JudgeTimeout (when the last failure was
// a timeout) or JudgeUnreachable.
class HttpJudge : public JudgeClient {
 public:
  HttpJudge(std::string judge_id, std::string url, double timeout_seconds = 30.0, int retries = 2);
  std::string ask(const QARecord& record) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  double timeout_seconds_;
  int retries_;
};

struct JudgeContext {
  std::vector<QARecord> training;  // for majority_class
  std::uint64_t seed = 0;          // for seeded_random
  double timeout_seconds = 30.0;
};

// Descriptor forms: "local:always_correct", "local:always_wrong",
// "local:majority_class", "local:seeded_random" or "local:seeded_random:<p>",
// "http:<url>". Throws InvalidArgument.
std::unique_ptr<JudgeClient> make_judge(const std::string& descriptor, const std::string& judge_id,
                                        const JudgeContext& context);

struct JudgeVerdict {
  std::string record_id;
  std::string judge_id;
  std::string raw_answer;
  bool correct = false;
  double latency = 0.0;  // seconds
  bool unparseable = false;
};
nlohmann::json verdict_to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

// Queries one judge blindly and decides correctness here (exact match, or
// 10% relative error for regression). Unparseable replies are incorrect.
// Throws InvalidArgument for grounding records, and the judge's errors.
JudgeVerdict judge_blind(const QARecord& record, JudgeClient& judge);

// Verdicts persisted as JSONL keyed by (record_id, judge_id); the last line
// for a key wins. Safe for concurrent put().
class VerdictCache {
 public:
  explicit VerdictCache(std::filesystem::path file);
  std::optional<JudgeVerdict> get(const std::string& record_id, const std::string& judge_id) const;
  void put(const JudgeVerdict& verdict);
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
  bool torn_tail_ = false;  // file does not end in '\n'
  std::map<std::pair<std::string, std::string>, JudgeVerdict> entries_;
};

// $SVF_CACHE_DIR, else ".svf_cache" under the working directory.
std::filesystem::path default_cache_dir();

struct FilterResult {
  std::vector<QARecord> kept;
  std::vector<QARecord> removed;
  std::vector<JudgeVerdict> verdicts;  // record order, then panel order
  std::set<std::string> incomplete;    // record ids kept because a judge failed
  std::map<std::string, std::string> failures;  // "record_id/judge_id" -> error text
};

// Removes a record iff at least `threshold` judges answer it correctly.
// Grounding records are always kept and never queried. A record missing a
// verdict (judge error) is kept and listed in `incomplete`. Throws
// InvalidArgument when the panel is smaller than the threshold, the
// threshold is below 1 or judge ids repeat.
FilterResult filter_benchmark(const std::vector<QARecord>& records, const std::vector<JudgeClient*>& panel,
                              int threshold, int jobs = 1, VerdictCache* cache = nullptr);

}  // namespace svf
