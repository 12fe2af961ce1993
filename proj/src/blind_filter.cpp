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

#include "svf/blind_filter.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "svf/error.hpp"
#include "svf/eval.hpp"
#include "svf/parallel.hpp"
#include "svf/strings.hpp"

namespace svf {

using nlohmann::json;

BlindQuery blind_query(const QARecord& record) {
  BlindQuery q{record.record_id, record.question, {}};
  for (const auto& c : record.choices) q.choices.push_back(choice_text(c));
  return q;
}

json blind_query_to_json(const BlindQuery& query) {
  json j = {{"record_id", query.record_id}, {"question", query.question}};
  if (!query.choices.empty()) j["choices"] = query.choices;
  return j;
}

namespace {

std::string correct_reply(const QARecord& r) { return oracle_prediction(r).raw_text; }

std::string wrong_reply(const QARecord& r) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, bool>) {
          return a ? "no" : "yes";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(a + 1);
        } else if constexpr (std::is_same_v<T, ChoiceLetter>) {
          return std::string(1, static_cast<char>('A' + (a.letter - 'A' + 1) % 4));
        } else if constexpr (std::is_same_v<T, Meters>) {
          return strprintf("%.17gm", 2.0 * a.value);
        } else {
          return "I cannot tell";
        }
      },
      r.answer);
}

}  // namespace

MockJudge::MockJudge(std::string judge_id, MockPolicy policy, double p, std::uint64_t seed,
                     const std::vector<QARecord>& training)
    : JudgeClient(std::move(judge_id)), policy_(policy), p_(p), seed_(seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "seeded_random p must lie in [0, 1]");
  if (policy != MockPolicy::kMajorityClass) return;
  std::map<Category, std::map<std::string, std::size_t>> counts;
  std::map<Category, std::vector<double>> metric;
  for (const auto& r : training) {
    if (is_grounding(r.category)) continue;
    if (const auto* m = std::get_if<Meters>(&r.answer)) {
      metric[r.category].push_back(m->value);
    } else {
      ++counts[r.category][answer_text(r)];
    }
  }
  for (const auto& [category, table] : counts) {
    // Highest count; ties resolve to the smallest answer text.
    const auto best = std::max_element(table.begin(), table.end(), [](const auto& a, const auto& b) {
      return a.second < b.second || (a.second == b.second && a.first > b.first);
    });
    majority_[category] = best->first;
  }
  for (auto& [category, values] : metric) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    majority_[category] = strprintf("%.17gm", median);
  }
}

std::string MockJudge::ask(const QARecord& record) {
  switch (policy_) {
    case MockPolicy::kAlwaysCorrect:
      return correct_reply(record);
    case MockPolicy::kAlwaysWrong:
      return wrong_reply(record);
    case MockPolicy::kMajorityClass: {
      auto it = majority_.find(record.category);
      return it == majority_.end() ? "I cannot tell" : it->second;
    }
    case MockPolicy::kSeededRandom: {
      Rng rng(StableHash().add(seed_).add(judge_id()).add(record.record_id).value());
      return rng.uniform() < p_ ? correct_reply(record) : wrong_reply(record);
    }
  }
  return {};
}

std::unique_ptr<JudgeClient> make_judge(const std::string& descriptor, const std::string& judge_id,
                                        const JudgeContext& context) {
  if (descriptor.rfind("http:", 0) == 0) {
    return std::make_unique<HttpJudge>(judge_id, descriptor.substr(5), context.timeout_seconds);
  }
  if (descriptor.rfind("local:", 0) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "judge descriptor must start with local: or http: (" + descriptor + ")");
  }
  const std::string policy = descriptor.substr(6);
  if (policy == "always_correct") return std::make_unique<MockJudge>(judge_id, MockPolicy::kAlwaysCorrect);
  if (policy == "always_wrong") return std::make_unique<MockJudge>(judge_id, MockPolicy::kAlwaysWrong);
  if (policy == "majority_class") {
    return std::make_unique<MockJudge>(judge_id, MockPolicy::kMajorityClass, 0.5, context.seed, context.training);
  }
  if (policy.rfind("seeded_random", 0) == 0) {
    double p = 0.5;
    if (policy.size() > 13) {
      if (policy[13] != ':') throw Error(ErrorCode::kInvalidArgument, "bad judge policy '" + policy + "'");
      char* end = nullptr;
      p = std::strtod(policy.c_str() + 14, &end);
      if (end == policy.c_str() + 14 || *end != '\0') {
        throw Error(ErrorCode::kInvalidArgument, "bad seeded_random probability in '" + policy + "'");
      }
    }
    return std::make_unique<MockJudge>(judge_id, MockPolicy::kSeededRandom, p, context.seed);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown judge policy '" + policy + "'");
}

json verdict_to_json(const JudgeVerdict& v) {
  return {{"record_id", v.record_id}, {"judge_id", v.judge_id},   {"raw_answer", v.raw_answer},
          {"correct", v.correct},     {"latency", v.latency},     {"unparseable", v.unparseable}};
}

JudgeVerdict verdict_from_json(const json& j) {
  return {j.at("record_id").get<std::string>(), j.at("judge_id").get<std::string>(),
          j.at("raw_answer").get<std::string>(), j.at("correct").get<bool>(),
          j.value("latency", 0.0),               j.value("unparseable", false)};
}

JudgeVerdict judge_blind(const QARecord& record, JudgeClient& judge) {
  if (is_grounding(record.category)) {
    throw Error(ErrorCode::kInvalidArgument, "grounding records are not blind-filterable");
  }
  const auto start = std::chrono::steady_clock::now();
  std::string raw = judge.ask(record);
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto parsed = parse_answer(raw, record.category);
  JudgeVerdict v{record.record_id, judge.judge_id(), std::move(raw), false, latency, !parsed};
  v.correct = parsed && answer_correct(record, *parsed);
  return v;
}

VerdictCache::VerdictCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_, std::ios::binary);
  if (!in) return;
  in.seekg(0, std::ios::end);
  if (in.tellg() > 0) {
    in.seekg(-1, std::ios::end);
    torn_tail_ = in.get() != '\n';
  }
  in.seekg(0);
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    try {
      JudgeVerdict v = verdict_from_json(json::parse(line));
      auto key = std::make_pair(v.record_id, v.judge_id);
      entries_[std::move(key)] = std::move(v);
    } catch (const std::exception&) {
      // A torn final line from an interrupted run is ignored; the pair is
      // simply queried again.
      continue;
    }
  }
}

std::optional<JudgeVerdict> VerdictCache::get(const std::string& record_id, const std::string& judge_id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({record_id, judge_id});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::put(const JudgeVerdict& verdict) {
  std::lock_guard lock(mu_);
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot append to " + file_.string());
  if (torn_tail_) out << '\n';
  torn_tail_ = false;
  out << verdict_to_json(verdict).dump() << '\n';
  entries_[{verdict.record_id, verdict.judge_id}] = verdict;
}

std::filesystem::path default_cache_dir() {
  if (const char* dir = std::getenv("SVF_CACHE_DIR"); dir && *dir) return dir;
  return ".svf_cache";
}

FilterResult filter_benchmark(const std::vector<QARecord>& records, const std::vector<JudgeClient*>& panel,
                              int threshold, int jobs, VerdictCache* cache) {
  if (threshold < 1) throw Error(ErrorCode::kInvalidArgument, "threshold must be >= 1");
  if (panel.size() < static_cast<std::size_t>(threshold)) {
    throw Error(ErrorCode::kInvalidArgument, strprintf("panel of %zu judges cannot reach threshold %d",
                                                       panel.size(), threshold));
  }
  std::set<std::string> ids;
  for (const JudgeClient* j : panel) {
    if (!ids.insert(j->judge_id()).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate judge id '" + j->judge_id() + "'");
    }
  }

  std::vector<std::size_t> queried;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!is_grounding(records[i].category)) queried.push_back(i);
  }
  const std::size_t n_judges = panel.size();
  std::vector<std::optional<JudgeVerdict>> slots(queried.size() * n_judges);
  std::vector<std::string> errors(slots.size());
  parallel_for(slots.size(), jobs, [&](std::size_t k) {
    const QARecord& r = records[queried[k / n_judges]];
    JudgeClient& judge = *panel[k % n_judges];
    if (cache) {
      if (auto hit = cache->get(r.record_id, judge.judge_id())) {
        slots[k] = std::move(hit);
        return;
      }
    }
    try {
      JudgeVerdict v = judge_blind(r, judge);
      if (cache) cache->put(v);
      slots[k] = std::move(v);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kJudgeTimeout && e.code() != ErrorCode::kJudgeUnreachable) throw;
      errors[k] = e.what();
    }
  });

  FilterResult out;
  std::vector<bool> remove(records.size(), false);
  for (std::size_t q = 0; q < queried.size(); ++q) {
    const QARecord& r = records[queried[q]];
    int correct = 0;
    bool complete = true;
    for (std::size_t j = 0; j < n_judges; ++j) {
      const std::size_t k = q * n_judges + j;
      if (!slots[k]) {
        complete = false;
        out.failures[r.record_id + "/" + panel[j]->judge_id()] = errors[k];
        continue;
      }
      correct += slots[k]->correct;
      out.verdicts.push_back(*slots[k]);
    }
    if (!complete) {
      out.incomplete.insert(r.record_id);
    } else {
      remove[queried[q]] = correct >= threshold;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) (remove[i] ? out.removed : out.kept).push_back(records[i]);
  return out;
}

}  // namespace svf
