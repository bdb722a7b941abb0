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

#ifndef MGPATT_CLI_RUN_CONFIG_HPP_
#define MGPATT_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "mgpatt/data.hpp"
#include "mgpatt/training.hpp"

namespace mgpatt::cli {

// INI file with sections; every key must be known (see README). Relative
// paths resolve against the directory holding the config file.
class RunConfig {
 public:
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text,
                         const std::filesystem::path& base_dir = ".");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_real(const std::string& section, const std::string& key,
                  double fallback) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::filesystem::path get_path(const std::string& section, const std::string& key,
                                 const std::filesystem::path& fallback) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
};

// Settings shared by all commands after command-line overrides.
struct RunSettings {
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out = "out";
};

RunSettings run_settings(const RunConfig& config, std::optional<std::uint64_t> seed,
                         std::optional<int> threads,
                         std::optional<std::filesystem::path> out);

// Numeric label_effect or one of the presets none, low, medium, high.
double label_effect_from_string(const std::string& text);

struct GenerateSettings {
  GeneratorConfig generator;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  int min_observations = kMinObservations;
  int max_observations = kMaxObservations;
  int max_horizon = kMaxHorizon;
};
GenerateSettings generate_settings(const RunConfig& config);

TrainConfig train_settings(const RunConfig& config);
SearchSpace search_space(const RunConfig& config);

}  // namespace mgpatt::cli

#endif  // MGPATT_CLI_RUN_CONFIG_HPP_
