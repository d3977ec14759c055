// Copyright 2026 The permsynth Authors
//
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permsynth {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad flags, config, parse or I/O errors
  kExitValidation = 2,  // inputs that do not fit the model or topology
  kExitSynthesis = 3,   // no circuit found within the step cap
  kExitInternal = 4,    // broken internal invariant
};

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "PERMSYNTH_OUT_DIR";

// Runs the tool with argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permsynth
