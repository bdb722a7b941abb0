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

#ifndef MGPATT_CHECKPOINT_HPP_
#define MGPATT_CHECKPOINT_HPP_

#include <iosfwd>
#include <optional>
#include <string>

#include "mgpatt/model.hpp"
#include "mgpatt/training.hpp"

namespace mgpatt {

inline constexpr int kCheckpointFormatVersion = 1;

// Text container. Line 1 is the magic "MGPATT1", then
//   format_version 1
//   config <key> <value...>        model configuration
//   param <name> <count> <values>  raw parameters in Model::visit order
//   adam <t> <lr> <beta1> <beta2> <epsilon>
//   adam_m <count> <values>
//   adam_v <count> <values>
//   progress <epochs_completed> <best_val_auroc> <epochs_since_best>
//   end
// The adam and progress lines are present only for training checkpoints.
// Reals are C99 hexadecimal floats, so a round trip is bit-exact.
struct Checkpoint {
  Model model;
  std::optional<TrainState> state;  // state->best is set to `model`
};

void write_checkpoint(std::ostream& out, const Model& model,
                      const TrainState* state = nullptr);
void write_checkpoint(const std::string& path, const Model& model,
                      const TrainState* state = nullptr);
// Throws DataError on a bad magic, version, shape or parameter name.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace mgpatt

#endif  // MGPATT_CHECKPOINT_HPP_
