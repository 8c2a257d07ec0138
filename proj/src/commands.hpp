// Copyright 2026 The MoveTok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace movetok {

inline constexpr const char* kVersion = "0.1.0";

struct CommandInfo {
  std::string name;
  std::string summary;
};

const std::vector<CommandInfo>& command_list();

/// Built-in option values of a command, before any config file or flag.
OrderedJson command_defaults(std::string_view command);

/// Runs a file-level command. Options are a flat JSON object; unknown keys
/// are usage errors. Every run writes "<command>.manifest.json" to out_dir
/// holding the resolved options and SHA-256 digests of inputs and outputs.
OrderedJson run_command(std::string_view command, const Json& options);

}  // namespace movetok
