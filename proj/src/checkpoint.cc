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

#include "mgpatt/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "mgpatt/errors.hpp"

namespace mgpatt {
namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw DataError("checkpoint: bad number " + token);
  return v;
}

long parse_int(const std::string& token) {
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0') throw DataError("checkpoint: bad integer " + token);
  return v;
}

void write_values(std::ostream& out, std::span<const double> values) {
  out << values.size();
  for (double v : values) out << ' ' << hex(v);
}

std::vector<double> read_values(std::istringstream& in) {
  std::string token;
  if (!(in >> token)) throw DataError("checkpoint: missing count");
  const long n = parse_int(token);
  if (n < 0) throw DataError("checkpoint: negative count");
  std::vector<double> values;
  values.reserve(n);
  for (long i = 0; i < n; ++i) {
    if (!(in >> token)) throw DataError("checkpoint: truncated values");
    values.push_back(parse_real(token));
  }
  if (in >> token) throw DataError("checkpoint: trailing values");
  return values;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const TrainState* state) {
  const ModelConfig& c = model.config;
  out << "MGPATT1\n";
  out << "format_version " << kCheckpointFormatVersion << "\n";
  out << "config n_features " << c.n_features << "\n";
  out << "config n_static " << c.n_static << "\n";
  out << "config n_grid " << c.n_grid << "\n";
  out << "config ablation " << to_string(c.ablation) << "\n";
  out << "config kernel_size " << c.tcn.kernel_size << "\n";
  out << "config n_blocks " << c.tcn.n_blocks << "\n";
  out << "config hidden_channels " << c.tcn.hidden_channels << "\n";
  out << "config dropout " << hex(c.tcn.dropout) << "\n";
  out << "config l2 " << hex(c.tcn.l2) << "\n";
  out << "config init_lengthscales ";
  write_values(out, c.init_lengthscales);
  out << "\n";
  out << "config init_factor " << hex(c.init_factor) << "\n";
  out << "config init_noise " << hex(c.init_noise) << "\n";
  model.visit([&](const std::string& name, std::span<const double> v) {
    out << "param " << name << ' ';
    write_values(out, v);
    out << "\n";
  });
  if (state) {
    const Adam& a = state->optimizer;
    out << "adam " << a.steps() << ' ' << hex(a.learning_rate()) << ' ' << hex(a.beta1())
        << ' ' << hex(a.beta2()) << ' ' << hex(a.epsilon()) << "\n";
    out << "adam_m ";
    write_values(out, a.first_moment());
    out << "\nadam_v ";
    write_values(out, a.second_moment());
    out << "\nprogress " << state->epochs_completed << ' ' << hex(state->best_val_auroc)
        << ' ' << state->epochs_since_best << "\n";
  }
  out << "end\n";
}

void write_checkpoint(const std::string& path, const Model& model, const TrainState* state) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_checkpoint(out, model, state);
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "MGPATT1") throw DataError("checkpoint: bad magic");
  if (!std::getline(in, line) ||
      line != "format_version " + std::to_string(kCheckpointFormatVersion))
    throw DataError("checkpoint: unsupported format_version");

  ModelConfig config;
  std::vector<std::pair<std::string, std::vector<double>>> params;
  std::optional<TrainState> state;
  long adam_t = 0;
  double lr = 0, b1 = 0, b2 = 0, eps = 0;
  std::vector<double> adam_m, adam_v;
  bool has_adam = false, has_progress = false, ended = false;
  TrainState progress;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "end") {
      ended = true;
      break;
    }
    if (kind == "config") {
      std::string key, value;
      ls >> key;
      if (key == "init_lengthscales") {
        config.init_lengthscales = read_values(ls);
        continue;
      }
      if (!(ls >> value)) throw DataError("checkpoint: config without value: " + key);
      if (key == "n_features") config.n_features = static_cast<int>(parse_int(value));
      else if (key == "n_static") config.n_static = static_cast<int>(parse_int(value));
      else if (key == "n_grid") config.n_grid = static_cast<int>(parse_int(value));
      else if (key == "ablation") {
        try {
          config.ablation = ablation_from_string(value);
        } catch (const ConfigError& e) {
          throw DataError(std::string("checkpoint: ") + e.what());
        }
      } else if (key == "kernel_size") config.tcn.kernel_size = static_cast<int>(parse_int(value));
      else if (key == "n_blocks") config.tcn.n_blocks = static_cast<int>(parse_int(value));
      else if (key == "hidden_channels") config.tcn.hidden_channels = static_cast<int>(parse_int(value));
      else if (key == "dropout") config.tcn.dropout = parse_real(value);
      else if (key == "l2") config.tcn.l2 = parse_real(value);
      else if (key == "init_factor") config.init_factor = parse_real(value);
      else if (key == "init_noise") config.init_noise = parse_real(value);
      else throw DataError("checkpoint: unknown config key " + key);
    } else if (kind == "param") {
      std::string name;
      ls >> name;
      params.emplace_back(name, read_values(ls));
    } else if (kind == "adam") {
      std::string t, a, b, c, d;
      if (!(ls >> t >> a >> b >> c >> d)) throw DataError("checkpoint: bad adam line");
      adam_t = parse_int(t);
      lr = parse_real(a);
      b1 = parse_real(b);
      b2 = parse_real(c);
      eps = parse_real(d);
      has_adam = true;
    } else if (kind == "adam_m") {
      adam_m = read_values(ls);
    } else if (kind == "adam_v") {
      adam_v = read_values(ls);
    } else if (kind == "progress") {
      std::string e, best, since;
      if (!(ls >> e >> best >> since)) throw DataError("checkpoint: bad progress line");
      progress.epochs_completed = static_cast<int>(parse_int(e));
      progress.best_val_auroc = parse_real(best);
      progress.epochs_since_best = static_cast<int>(parse_int(since));
      has_progress = true;
    } else {
      throw DataError("checkpoint: unknown line kind " + kind);
    }
  }
  if (!ended) throw DataError("checkpoint: missing end marker");

  Checkpoint out;
  try {
    out.model = Model::init(config, 0);
  } catch (const Error& e) {
    throw DataError(std::string("checkpoint: invalid config: ") + e.what());
  }
  std::size_t k = 0;
  out.model.visit([&](const std::string& name, std::span<double> v) {
    if (k >= params.size() || params[k].first != name)
      throw DataError("checkpoint: expected parameter " + name);
    if (params[k].second.size() != v.size())
      throw DataError("checkpoint: wrong size for " + name);
    std::copy(params[k].second.begin(), params[k].second.end(), v.begin());
    ++k;
  });
  if (k != params.size()) throw DataError("checkpoint: unexpected extra parameters");

  if (has_adam != has_progress) throw DataError("checkpoint: partial training state");
  if (has_adam) {
    TrainState s = progress;
    s.model = out.model;
    s.best = out.model;
    s.optimizer = Adam(out.model.n_parameters(), lr, b1, b2, eps);
    try {
      s.optimizer.restore(adam_t, adam_m, adam_v);
    } catch (const InputError& e) {
      throw DataError(std::string("checkpoint: ") + e.what());
    }
    out.state = std::move(s);
  }
  return out;
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return read_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace mgpatt
