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

#include "mgpatt/cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "mgpatt/errors.hpp"

namespace mgpatt::cli {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"seed", "threads", "out"}},
      {"data", {"dir"}},
      {"generate",
       {"n_patients", "n_vitals", "n_labs", "n_units", "case_fraction", "label_effect",
        "drift_hours", "drift_features", "vital_rate", "lab_rate", "case_hours_min",
        "case_hours_max", "control_hours_min", "control_hours_max", "vital_lengthscale",
        "lab_lengthscale", "noise_sigma", "train_fraction", "validation_fraction",
        "min_observations", "max_observations", "max_horizon"}},
      {"train",
       {"s_count", "batch_size", "max_epochs", "learning_rate", "patience", "ablation",
        "max_batches_per_epoch", "eval_s_count", "mgp_pretrain_steps", "mgp_pretrain_lr",
        "init_lengthscales", "adam_beta1", "adam_beta2", "adam_epsilon", "resume"}},
      {"tcn", {"kernel_size", "n_blocks", "hidden_channels", "dropout", "l2"}},
      {"evaluate", {"checkpoint", "split", "s_count", "bootstrap"}},
      {"explain", {"checkpoint", "split", "patient", "horizon", "s_count"}},
      {"baselines",
       {"split", "n_hours", "logreg_l2", "insight_l2", "insight_variables", "include_age",
        "lookback_hours", "export_features"}},
      {"search",
       {"n_trials", "s_count_min", "s_count_max", "kernel_size_min", "kernel_size_max",
        "n_blocks_min", "n_blocks_max", "hidden_channels_min", "hidden_channels_max",
        "dropout_min", "dropout_max", "l2_min", "l2_max"}},
  };
  return s;
}

void check_schema(const pt::ptree& tree) {
  for (const auto& [section, node] : tree) {
    const auto it = schema().find(section);
    if (node.empty() && !node.data().empty())
      throw ConfigError("key outside any section: " + section);
    if (it == schema().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : node)
      if (!it->second.count(key))
        throw ConfigError("unknown config key [" + section + "] " + key);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& where, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v))
    throw ConfigError(where + ": expected a finite number, got '" + text + "'");
  return v;
}

long parse_int(const std::string& where, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(where + ": expected an integer, got '" + text + "'");
  return v;
}

int to_int(long v, const std::string& where) {
  if (v < -2147483647L || v > 2147483647L) throw ConfigError(where + ": out of range");
  return static_cast<int>(v);
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_schema(c.tree_);
  c.base_dir_ = base_dir;
  return c;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto node = tree_.get_child_optional(section);
  return node && node->get_child_optional(pt::ptree::path_type(key, '\0'));
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return trim(tree_.get_child(section).get<std::string>(pt::ptree::path_type(key, '\0')));
}

double RunConfig::get_real(const std::string& section, const std::string& key,
                           double fallback) const {
  if (!has(section, key)) return fallback;
  return parse_real("[" + section + "] " + key, get_string(section, key, ""));
}

long RunConfig::get_int(const std::string& section, const std::string& key,
                        long fallback) const {
  if (!has(section, key)) return fallback;
  return parse_int("[" + section + "] " + key, get_string(section, key, ""));
}

bool RunConfig::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected true or false");
}

std::filesystem::path RunConfig::get_path(const std::string& section, const std::string& key,
                                          const std::filesystem::path& fallback) const {
  std::filesystem::path p = has(section, key) ? std::filesystem::path(get_string(section, key, ""))
                                              : fallback;
  if (p.empty()) return p;
  return p.is_absolute() ? p : base_dir_ / p;
}

RunSettings run_settings(const RunConfig& config, std::optional<std::uint64_t> seed,
                         std::optional<int> threads,
                         std::optional<std::filesystem::path> out) {
  RunSettings s;
  const long cfg_seed = config.get_int("run", "seed", 0);
  if (cfg_seed < 0) throw ConfigError("[run] seed must be >= 0");
  s.seed = seed ? *seed : static_cast<std::uint64_t>(cfg_seed);
  s.threads = threads ? *threads : to_int(config.get_int("run", "threads", 1), "[run] threads");
  if (s.threads < 1) throw ConfigError("threads must be >= 1");
  s.out = out ? *out : config.get_path("run", "out", "out");
  return s;
}

double label_effect_from_string(const std::string& text) {
  if (text == "none") return 0.0;
  if (text == "low") return 1.0;
  if (text == "medium") return 2.0;
  if (text == "high") return 3.0;
  return parse_real("[generate] label_effect", text);
}

GenerateSettings generate_settings(const RunConfig& c) {
  GenerateSettings s;
  GeneratorConfig& g = s.generator;
  const std::string sec = "generate";
  g.n_patients = to_int(c.get_int(sec, "n_patients", g.n_patients), "n_patients");
  g.n_vitals = to_int(c.get_int(sec, "n_vitals", g.n_vitals), "n_vitals");
  g.n_labs = to_int(c.get_int(sec, "n_labs", g.n_labs), "n_labs");
  g.n_units = to_int(c.get_int(sec, "n_units", g.n_units), "n_units");
  g.case_fraction = c.get_real(sec, "case_fraction", g.case_fraction);
  if (c.has(sec, "label_effect"))
    g.label_effect = label_effect_from_string(c.get_string(sec, "label_effect", ""));
  g.drift_hours = c.get_real(sec, "drift_hours", g.drift_hours);
  if (c.has(sec, "drift_features")) {
    g.drift_features.clear();
    for (const auto& item : split_list(c.get_string(sec, "drift_features", "")))
      g.drift_features.push_back(to_int(parse_int("[generate] drift_features", item), "drift_features"));
  }
  g.vital_rate = c.get_real(sec, "vital_rate", g.vital_rate);
  g.lab_rate = c.get_real(sec, "lab_rate", g.lab_rate);
  g.case_hours_min = c.get_real(sec, "case_hours_min", g.case_hours_min);
  g.case_hours_max = c.get_real(sec, "case_hours_max", g.case_hours_max);
  g.control_hours_min = c.get_real(sec, "control_hours_min", g.control_hours_min);
  g.control_hours_max = c.get_real(sec, "control_hours_max", g.control_hours_max);
  g.vital_lengthscale = c.get_real(sec, "vital_lengthscale", g.vital_lengthscale);
  g.lab_lengthscale = c.get_real(sec, "lab_lengthscale", g.lab_lengthscale);
  g.noise_sigma = c.get_real(sec, "noise_sigma", g.noise_sigma);
  s.train_fraction = c.get_real(sec, "train_fraction", s.train_fraction);
  s.validation_fraction = c.get_real(sec, "validation_fraction", s.validation_fraction);
  s.min_observations = to_int(c.get_int(sec, "min_observations", s.min_observations), "min_observations");
  s.max_observations = to_int(c.get_int(sec, "max_observations", s.max_observations), "max_observations");
  s.max_horizon = to_int(c.get_int(sec, "max_horizon", s.max_horizon), "max_horizon");
  if (s.min_observations < 0 || s.max_observations < 1 || s.max_horizon < 0)
    throw ConfigError("[generate] observation limits and max_horizon must be >= 0");
  g.validate();
  return s;
}

TrainConfig train_settings(const RunConfig& c) {
  TrainConfig t;
  const std::string sec = "train";
  t.s_count = to_int(c.get_int(sec, "s_count", t.s_count), "s_count");
  t.batch_size = to_int(c.get_int(sec, "batch_size", t.batch_size), "batch_size");
  t.max_epochs = to_int(c.get_int(sec, "max_epochs", t.max_epochs), "max_epochs");
  t.learning_rate = c.get_real(sec, "learning_rate", t.learning_rate);
  t.patience = to_int(c.get_int(sec, "patience", t.patience), "patience");
  t.ablation = ablation_from_string(c.get_string(sec, "ablation", "full"));
  t.max_batches_per_epoch =
      to_int(c.get_int(sec, "max_batches_per_epoch", t.max_batches_per_epoch), "max_batches_per_epoch");
  t.eval_s_count = to_int(c.get_int(sec, "eval_s_count", t.eval_s_count), "eval_s_count");
  t.mgp_pretrain_steps =
      to_int(c.get_int(sec, "mgp_pretrain_steps", t.mgp_pretrain_steps), "mgp_pretrain_steps");
  t.mgp_pretrain_lr = c.get_real(sec, "mgp_pretrain_lr", t.mgp_pretrain_lr);
  if (c.has(sec, "init_lengthscales")) {
    t.init_lengthscales.clear();
    for (const auto& item : split_list(c.get_string(sec, "init_lengthscales", "")))
      t.init_lengthscales.push_back(parse_real("[train] init_lengthscales", item));
  }
  t.adam_beta1 = c.get_real(sec, "adam_beta1", t.adam_beta1);
  t.adam_beta2 = c.get_real(sec, "adam_beta2", t.adam_beta2);
  t.adam_epsilon = c.get_real(sec, "adam_epsilon", t.adam_epsilon);
  t.tcn.kernel_size = to_int(c.get_int("tcn", "kernel_size", t.tcn.kernel_size), "kernel_size");
  t.tcn.n_blocks = to_int(c.get_int("tcn", "n_blocks", t.tcn.n_blocks), "n_blocks");
  t.tcn.hidden_channels =
      to_int(c.get_int("tcn", "hidden_channels", t.tcn.hidden_channels), "hidden_channels");
  t.tcn.dropout = c.get_real("tcn", "dropout", t.tcn.dropout);
  t.tcn.l2 = c.get_real("tcn", "l2", t.tcn.l2);
  t.validate();
  return t;
}

SearchSpace search_space(const RunConfig& c) {
  SearchSpace s;
  const std::string sec = "search";
  auto ints = [&](IntRange& r, const std::string& name) {
    r.min = to_int(c.get_int(sec, name + "_min", r.min), name);
    r.max = to_int(c.get_int(sec, name + "_max", r.max), name);
  };
  auto reals = [&](RealRange& r, const std::string& name) {
    r.min = c.get_real(sec, name + "_min", r.min);
    r.max = c.get_real(sec, name + "_max", r.max);
  };
  ints(s.s_count, "s_count");
  ints(s.kernel_size, "kernel_size");
  ints(s.n_blocks, "n_blocks");
  ints(s.hidden_channels, "hidden_channels");
  reals(s.dropout, "dropout");
  reals(s.l2, "l2");
  s.validate();
  return s;
}

}  // namespace mgpatt::cli
