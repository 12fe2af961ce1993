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
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace svf {

// Written as run_manifest.json into every output directory.
struct RunManifest {
  std::string command;
  nlohmann::json config;    // effective settings after config file and flags
  std::string config_hash;  // 16 hex digits over config.dump()
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version;
  double wall_time_seconds = 0.0;
  nlohmann::json summary;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

const char* tool_version();

// The `svf` command line. args[0] is the program name. Returns the exit code:
// 0 success, 1 runtime failure, 2 usage error (bad flags or config, an
// infeasible synthetic spec, a panel smaller than the threshold).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace svf
