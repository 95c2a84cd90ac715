// Copyright 2026 The pbcore Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command dispatch behind the command-line tool: reads inputs, runs the
// requested analysis and writes a JSON report plus CSV artifacts.

#ifndef PBCORE_SRC_COMMANDS_HPP
#define PBCORE_SRC_COMMANDS_HPP

#include <json.hpp>
#include <string>
#include <vector>

namespace pbcore::app {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// Request fields: command, votes, config, allocation, out_dir, seed and a
// command-specific options object.
struct Outcome {
  Json report;
  std::vector<std::string> artifacts;
};

Outcome run_command(const Json& request);

const std::vector<std::string>& command_names();

}  // namespace pbcore::app

#endif  // PBCORE_SRC_COMMANDS_HPP
