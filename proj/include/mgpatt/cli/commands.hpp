// Copyright 2026 The mgpatt Authors.
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

#ifndef MGPATT_CLI_COMMANDS_HPP_
#define MGPATT_CLI_COMMANDS_HPP_

#include <iosfwd>

namespace mgpatt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the `mgpatt` tool: `mgpatt <command> --config PATH
// [--seed N] [--threads K] [--out DIR]`. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mgpatt::cli

#endif  // MGPATT_CLI_COMMANDS_HPP_
