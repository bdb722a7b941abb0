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

#include "mgpatt/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mgpatt/errors.hpp"
#include "mgpatt/linalg.hpp"
#include "mgpatt/random.hpp"

namespace mgpatt {

using nlohmann::json;
using nlohmann::ordered_json;

double IrregularSeries::span_hours() const {
  if (admission) return -*admission;
  if (observations.empty()) return 0.0;
  double lo = observations.front().t;
  for (const auto& o : observations) lo = std::min(lo, o.t);
  return -lo;
}

void IrregularSeries::sort_observations() {
  std::stable_sort(observations.begin(), observations.end(),
                   [](const Observation& a, const Observation& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return a.feature < b.feature;
                   });
}

// ---------------------------------------------------------------- features

const std::vector<std::string>& vital_names() {
  static const std::vector<std::string> names = {
      "heartrate", "sysbp", "resprate", "tempc", "spo2_pulsoxy", "diabp", "meanbp"};
  return names;
}

const std::vector<std::string>& lab_names() {
  static const std::vector<std::string> names = {
      "wbc",     "ph_bloodgas", "ptt",        "lactate",  "bicarbonate", "creatinine",
      "chloride", "glucose",    "hematocrit", "hemoglobin", "platelet",  "potassium",
      "inr",     "pt",          "sodium",     "bun",      "magnesium"};
  return names;
}

int FeatureDictionary::id_of(const std::string& name) const {
  for (const auto& f : dynamic)
    if (f.name == name) return f.id;
  throw LookupError("unknown feature: " + name);
}

FeatureDictionary make_dictionary(int n_vitals, int n_labs, int n_units) {
  if (n_vitals < 0 || n_labs < 0 ||
      n_vitals > static_cast<int>(vital_names().size()) ||
      n_labs > static_cast<int>(lab_names().size()))
    throw ConfigError("feature counts exceed the known vitals and labs");
  if (n_units < 0) throw ConfigError("n_units must be >= 0");
  FeatureDictionary d;
  for (int i = 0; i < n_vitals; ++i)
    d.dynamic.push_back({i, vital_names()[i], FeatureKind::kVital});
  for (int i = 0; i < n_labs; ++i)
    d.dynamic.push_back({n_vitals + i, lab_names()[i], FeatureKind::kLab});
  d.static_names = {"age", "gender"};
  for (int u = 0; u < n_units; ++u) d.static_names.push_back("unit" + std::to_string(u));
  return d;
}

void write_dictionary(const FeatureDictionary& dict, const std::string& path) {
  ordered_json j;
  j["format_version"] = kDataFormatVersion;
  j["features"] = ordered_json::array();
  for (const auto& f : dict.dynamic)
    j["features"].push_back({{"id", f.id},
                             {"name", f.name},
                             {"kind", f.kind == FeatureKind::kVital ? "vital" : "lab"}});
  j["static"] = dict.static_names;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

FeatureDictionary read_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  FeatureDictionary d;
  try {
    const json j = json::parse(in);
    if (j.at("format_version").get<int>() != kDataFormatVersion)
      throw DataError("unsupported dictionary format_version in " + path);
    for (const auto& f : j.at("features")) {
      const std::string kind = f.at("kind").get<std::string>();
      if (kind != "vital" && kind != "lab") throw DataError("bad feature kind: " + kind);
      d.dynamic.push_back({f.at("id").get<int>(), f.at("name").get<std::string>(),
                           kind == "vital" ? FeatureKind::kVital : FeatureKind::kLab});
    }
    d.static_names = j.at("static").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError("malformed dictionary " + path + ": " + e.what());
  }
  for (std::size_t i = 0; i < d.dynamic.size(); ++i)
    if (d.dynamic[i].id != static_cast<int>(i))
      throw DataError("dictionary ids must be 0..M-1 in order");
  return d;
}

// -------------------------------------------------------------------- JSONL

void validate_series(const IrregularSeries& s, int n_features, int n_static) {
  const std::string who = "record " + s.patient_id + ": ";
  if (s.patient_id.empty()) throw DataError("record without patient_id");
  if (s.label != 0 && s.label != 1) throw DataError(who + "label must be 0 or 1");
  if (s.horizon < 0) throw DataError(who + "negative horizon");
  if (n_static >= 0 && s.static_features.size() != n_static)
    throw DataError(who + "expected " + std::to_string(n_static) + " static features");
  if (!s.static_features.allFinite()) throw DataError(who + "non-finite static feature");
  double min_t = 0.0;
  for (const auto& o : s.observations) {
    if (!std::isfinite(o.t) || o.t > 0.0) throw DataError(who + "observation time must be finite and <= 0");
    if (!std::isfinite(o.value)) throw DataError(who + "non-finite observation value");
    if (o.feature < 0 || (n_features >= 0 && o.feature >= n_features))
      throw DataError(who + "feature id out of range");
    min_t = std::min(min_t, o.t);
  }
  if (s.admission) {
    if (!std::isfinite(*s.admission) || *s.admission > 0.0)
      throw DataError(who + "admission must be finite and <= 0");
    if (*s.admission > min_t + 1e-9)
      throw DataError(who + "observation before admission");
  }
}

namespace {

ordered_json to_json(const IrregularSeries& s) {
  ordered_json j;
  j["format_version"] = kDataFormatVersion;
  j["patient_id"] = s.patient_id;
  j["horizon"] = s.horizon;
  j["label"] = s.label;
  j["static"] = std::vector<double>(s.static_features.data(),
                                    s.static_features.data() + s.static_features.size());
  if (s.admission) j["admission"] = *s.admission;
  ordered_json obs = ordered_json::array();
  for (const auto& o : s.observations) obs.push_back({{"t", o.t}, {"f", o.feature}, {"v", o.value}});
  j["observations"] = std::move(obs);
  return j;
}

IrregularSeries from_json(const json& j) {
  static const std::vector<std::string> known = {
      "format_version", "patient_id", "horizon", "label", "static", "admission", "observations"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw DataError("unknown key: " + it.key());
  if (j.contains("format_version") && j.at("format_version").get<int>() != kDataFormatVersion)
    throw DataError("unsupported format_version");
  IrregularSeries s;
  s.patient_id = j.at("patient_id").get<std::string>();
  s.horizon = j.at("horizon").get<int>();
  s.label = j.at("label").get<int>();
  const auto stat = j.at("static").get<std::vector<double>>();
  s.static_features = Eigen::Map<const Eigen::VectorXd>(stat.data(), stat.size());
  if (j.contains("admission")) s.admission = j.at("admission").get<double>();
  for (const auto& o : j.at("observations")) {
    s.observations.push_back(
        {o.at("t").get<double>(), o.at("f").get<int>(), o.at("v").get<double>()});
  }
  return s;
}

}  // namespace

void write_jsonl(std::ostream& out, std::span<const IrregularSeries> records) {
  for (const auto& r : records) {
    validate_series(r);
    out << to_json(r).dump() << "\n";
  }
}

void write_jsonl(const std::string& path, std::span<const IrregularSeries> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_jsonl(out, records);
  if (!out) throw DataError("write failed: " + path);
}

std::vector<IrregularSeries> read_jsonl(std::istream& in, int n_features, int n_static) {
  std::vector<IrregularSeries> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      IrregularSeries s = from_json(json::parse(line));
      validate_series(s, n_features, n_static);
      records.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<IrregularSeries> read_jsonl(const std::string& path, int n_features,
                                        int n_static) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return read_jsonl(in, n_features, n_static);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// --------------------------------------------------------------- generator

void GeneratorConfig::validate() const {
  if (n_patients < 2) throw ConfigError("n_patients must be >= 2");
  if (n_vitals < 1 || n_labs < 0) throw ConfigError("need at least one vital");
  (void)make_dictionary(n_vitals, n_labs, n_units);
  if (!(case_fraction > 0.0 && case_fraction < 1.0))
    throw ConfigError("case_fraction must be in (0, 1)");
  if (!std::isfinite(label_effect)) throw ConfigError("label_effect must be finite");
  if (!(drift_hours > 0.0)) throw ConfigError("drift_hours must be > 0");
  for (int f : drift_features)
    if (f < 0 || f >= n_vitals + n_labs) throw ConfigError("drift feature out of range");
  if (!(vital_rate > 0.0) || !(lab_rate > 0.0)) throw ConfigError("rates must be > 0");
  if (!(case_hours_min > 0.0 && case_hours_min <= case_hours_max))
    throw ConfigError("bad case window");
  if (!(control_hours_min > 0.0 && control_hours_min <= control_hours_max))
    throw ConfigError("bad control window");
  if (!(vital_lengthscale > 0.0 && lab_lengthscale > 0.0))
    throw ConfigError("lengthscales must be > 0");
  if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be > 0");
}

MgpParameters synthetic_true_parameters(const GeneratorConfig& config) {
  config.validate();
  const int m = config.n_vitals + config.n_labs;
  auto group_cov = [&](int begin, int end) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(m, m) * 1e-4;
    for (int i = begin; i < end; ++i)
      for (int j = begin; j < end; ++j) k(i, j) = (i == j) ? 1.0 : 0.3;
    return k;
  };
  MgpParameters p;
  const Eigen::MatrixXd covs[2] = {group_cov(0, config.n_vitals),
                                   group_cov(config.n_vitals, m)};
  const double lengthscales[2] = {config.vital_lengthscale, config.lab_lengthscale};
  for (int l = 0; l < 2; ++l) {
    Cluster c;
    c.family = TimeKernelFamily::kOrnsteinUhlenbeck;
    c.log_lengthscale = std::log(lengthscales[l]);
    Eigen::LLT<Eigen::MatrixXd> llt(covs[l]);
    c.features = FeatureCovFactor::from_factor(llt.matrixL());
    p.clusters.push_back(std::move(c));
  }
  p.noise = NoiseScales(Eigen::VectorXd::Constant(m, config.noise_sigma));
  p.validate();
  return p;
}

namespace {

IrregularSeries generate_one(const GeneratorConfig& config, const MgpParameters& truth,
                             int index, int label) {
  Rng rng(derive_seed(config.seed, index));
  const int m = config.n_vitals + config.n_labs;
  const double window = label == 1
                            ? uniform(rng, config.case_hours_min, config.case_hours_max)
                            : uniform(rng, config.control_hours_min, config.control_hours_max);
  std::vector<Observation> obs;
  for (int f = 0; f < m; ++f) {
    const double rate = f < config.n_vitals ? config.vital_rate : config.lab_rate;
    std::exponential_distribution<double> gap(rate);
    for (double t = gap(rng); t <= window; t += gap(rng)) obs.push_back({t, f, 0.0});
  }
  if (obs.empty()) obs.push_back({window, 0, 0.0});
  std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.feature < b.feature;
  });
  const double last = obs.back().t;
  ObservationIndex index_points;
  for (auto& o : obs) {
    o.t -= last;
    index_points.push_back({o.t, o.feature});
  }
  const Eigen::MatrixXd cov =
      assemble_observed_cov(index_points, truth.clusters, truth.noise);
  const JitteredCholesky chol = jittered_cholesky(cov);
  const Eigen::VectorXd draw =
      chol.lower * standard_normal(static_cast<Eigen::Index>(obs.size()), 1, rng);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    double v = draw[static_cast<Eigen::Index>(i)];
    if (label == 1 &&
        std::find(config.drift_features.begin(), config.drift_features.end(),
                  obs[i].feature) != config.drift_features.end()) {
      v += config.label_effect * std::clamp(1.0 + obs[i].t / config.drift_hours, 0.0, 1.0);
    }
    obs[i].value = v;
  }

  IrregularSeries s;
  char id[32];
  std::snprintf(id, sizeof(id), "p%06d", index);
  s.patient_id = id;
  s.label = label;
  s.horizon = 0;
  s.admission = -last;
  s.observations = std::move(obs);
  s.static_features = Eigen::VectorXd::Zero(2 + config.n_units);
  s.static_features[0] = standard_normal(1, 1, rng)(0, 0);
  s.static_features[1] = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : 0.0;
  if (config.n_units > 0) {
    std::uniform_int_distribution<int> unit(0, config.n_units - 1);
    s.static_features[2 + unit(rng)] = 1.0;
  }
  return s;
}

}  // namespace

std::vector<IrregularSeries> generate_synthetic(const GeneratorConfig& config,
                                                const MgpParameters& truth) {
  config.validate();
  if (truth.n_features() != config.n_vitals + config.n_labs)
    throw ConfigError("true parameters disagree with the feature count");
  const int n_cases = static_cast<int>(std::lround(config.case_fraction * config.n_patients));
  std::vector<IrregularSeries> out;
  out.reserve(config.n_patients);
  for (int i = 0; i < config.n_patients; ++i)
    out.push_back(generate_one(config, truth, i, i < n_cases ? 1 : 0));
  return out;
}

std::string ground_truth_json(const GeneratorConfig& config, const MgpParameters& truth) {
  ordered_json j;
  j["format_version"] = kDataFormatVersion;
  j["generator"] = {{"n_patients", config.n_patients},
                    {"n_vitals", config.n_vitals},
                    {"n_labs", config.n_labs},
                    {"n_units", config.n_units},
                    {"case_fraction", config.case_fraction},
                    {"label_effect", config.label_effect},
                    {"drift_hours", config.drift_hours},
                    {"drift_features", config.drift_features},
                    {"vital_rate", config.vital_rate},
                    {"lab_rate", config.lab_rate},
                    {"seed", config.seed}};
  ordered_json clusters = ordered_json::array();
  for (const auto& c : truth.clusters) {
    const Eigen::MatrixXd k = feature_cov(c.features);
    std::vector<std::vector<double>> rows(k.rows(), std::vector<double>(k.cols()));
    for (int i = 0; i < k.rows(); ++i)
      for (int jj = 0; jj < k.cols(); ++jj) rows[i][jj] = k(i, jj);
    clusters.push_back({{"family", std::string(to_string(c.family))},
                        {"lengthscale", c.lengthscale()},
                        {"feature_cov", rows}});
  }
  j["clusters"] = std::move(clusters);
  const Eigen::VectorXd sigma = truth.noise.sigma();
  j["noise_sigma"] = std::vector<double>(sigma.data(), sigma.data() + sigma.size());
  return j.dump(2);
}

// ---------------------------------------------------------------- pipeline

std::vector<IrregularSeries> horizon_augment(const IrregularSeries& series,
                                             int max_horizon, int min_obs) {
  std::vector<IrregularSeries> out;
  for (int h = 0; h <= max_horizon; ++h) {
    IrregularSeries copy = series;
    copy.horizon = h;
    copy.observations.clear();
    for (const auto& o : series.observations)
      if (o.t <= -static_cast<double>(h)) copy.observations.push_back({o.t + h, o.feature, o.value});
    if (copy.admission) *copy.admission += h;
    if (static_cast<int>(copy.observations.size()) < min_obs) continue;
    if (copy.admission && *copy.admission > 0.0) *copy.admission = 0.0;
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<IrregularSeries> horizon_augment(std::span<const IrregularSeries> series,
                                             int max_horizon, int min_obs) {
  std::vector<IrregularSeries> out;
  for (const auto& s : series) {
    auto copies = horizon_augment(s, max_horizon, min_obs);
    for (auto& c : copies) out.push_back(std::move(c));
  }
  return out;
}

namespace {

void cap_observations(IrregularSeries& s, int max_obs) {
  s.sort_observations();
  if (static_cast<int>(s.observations.size()) > max_obs)
    s.observations.erase(s.observations.begin(),
                         s.observations.end() - max_obs);
}

}  // namespace

std::vector<IrregularSeries> filter_and_cap(std::vector<IrregularSeries> records,
                                            int min_obs, int max_obs) {
  std::vector<IrregularSeries> out;
  for (auto& r : records) {
    if (static_cast<int>(r.observations.size()) < min_obs) continue;
    cap_observations(r, max_obs);
    out.push_back(std::move(r));
  }
  return out;
}

MatchResult match_controls(std::span<const IrregularSeries> cases,
                           std::span<const IrregularSeries> controls,
                           std::uint64_t seed, int min_obs, int max_obs) {
  if (cases.empty() || controls.empty())
    throw ConfigError("matching needs at least one case and one control");
  Rng rng(seed);
  std::vector<std::size_t> control_order(controls.size());
  std::iota(control_order.begin(), control_order.end(), 0);
  std::shuffle(control_order.begin(), control_order.end(), rng);
  std::vector<std::size_t> case_order(cases.size());
  std::iota(case_order.begin(), case_order.end(), 0);
  std::shuffle(case_order.begin(), case_order.end(), rng);
  std::uniform_int_distribution<std::size_t> any_case(0, cases.size() - 1);

  std::vector<std::size_t> assignment(controls.size());
  for (std::size_t k = 0; k < control_order.size(); ++k)
    assignment[control_order[k]] = k < case_order.size() ? case_order[k] : any_case(rng);

  MatchResult result;
  for (std::size_t c = 0; c < controls.size(); ++c) {
    const IrregularSeries& control = controls[c];
    const double window = cases[assignment[c]].span_hours();
    const double start = control.admission ? *control.admission : -control.span_hours();
    IrregularSeries kept = control;
    kept.observations.clear();
    for (const auto& o : control.observations)
      if (o.t - start <= window) kept.observations.push_back(o);
    if (static_cast<int>(kept.observations.size()) < min_obs) {
      ++result.dropped;
      continue;
    }
    kept.sort_observations();
    const double anchor = kept.observations.back().t;
    for (auto& o : kept.observations) o.t -= anchor;
    kept.admission = start - anchor;
    cap_observations(kept, max_obs);
    result.controls.push_back(std::move(kept));
    result.matched_case.push_back(assignment[c]);
  }
  return result;
}

void Normalization::apply(IrregularSeries& s) const {
  for (auto& o : s.observations) {
    if (o.feature >= mean.size()) throw DataError("feature id outside normalization");
    o.value = (o.value - mean[o.feature]) / std[o.feature];
  }
}

Normalization fit_normalization(std::span<const IrregularSeries> records, int n_features) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_features);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n_features);
  for (const auto& r : records)
    for (const auto& o : r.observations) {
      if (o.feature >= n_features) throw DataError("feature id out of range");
      sum[o.feature] += o.value;
      count[o.feature] += 1.0;
    }
  Normalization n;
  n.mean = Eigen::VectorXd::Zero(n_features);
  n.std = Eigen::VectorXd::Ones(n_features);
  for (int f = 0; f < n_features; ++f)
    if (count[f] > 0) n.mean[f] = sum[f] / count[f];
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n_features);
  for (const auto& r : records)
    for (const auto& o : r.observations) {
      const double d = o.value - n.mean[o.feature];
      sq[o.feature] += d * d;
    }
  for (int f = 0; f < n_features; ++f)
    if (count[f] > 0) n.std[f] = std::max(std::sqrt(sq[f] / count[f]), 1e-6);
  return n;
}

DatasetSplits split_normalize(std::vector<IrregularSeries> records, int n_features,
                              std::uint64_t seed, double train_fraction,
                              double validation_fraction) {
  if (!(train_fraction >= 0.0 && validation_fraction >= 0.0 &&
        train_fraction + validation_fraction <= 1.0 + 1e-12))
    throw ConfigError("split fractions must be >= 0 and sum to <= 1");
  std::vector<std::string> patients;
  std::map<std::string, std::size_t> position;
  for (const auto& r : records)
    if (position.emplace(r.patient_id, patients.size()).second) patients.push_back(r.patient_id);
  if (patients.size() < 10) throw ConfigError("splitting needs at least 10 patients");

  Rng rng(seed);
  std::vector<std::size_t> order(patients.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = patients.size();
  const std::size_t n_train = std::min<std::size_t>(n, std::lround(train_fraction * n));
  const std::size_t n_val =
      std::min<std::size_t>(n - n_train, std::lround(validation_fraction * n));
  std::vector<int> split_of(n);
  for (std::size_t k = 0; k < n; ++k)
    split_of[order[k]] = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);

  DatasetSplits out;
  for (auto& r : records) {
    switch (split_of[position.at(r.patient_id)]) {
      case 0: out.train.push_back(std::move(r)); break;
      case 1: out.validation.push_back(std::move(r)); break;
      default: out.test.push_back(std::move(r)); break;
    }
  }
  std::vector<IrregularSeries> base;
  for (const auto& r : out.train)
    if (r.horizon == 0) base.push_back(r);
  out.normalization = fit_normalization(base.empty() ? std::span<const IrregularSeries>(out.train)
                                                     : std::span<const IrregularSeries>(base),
                                        n_features);
  for (auto* split : {&out.train, &out.validation, &out.test})
    for (auto& r : *split) out.normalization.apply(r);
  return out;
}

// --------------------------------------------------------------- statistics

std::vector<HorizonStats> dataset_statistics(std::span<const IrregularSeries> records,
                                             int max_horizon) {
  std::vector<HorizonStats> stats(max_horizon + 1);
  std::vector<std::vector<double>> counts(max_horizon + 1);
  for (int h = 0; h <= max_horizon; ++h) stats[h].horizon = h;
  for (const auto& r : records) {
    if (r.horizon < 0 || r.horizon > max_horizon) continue;
    auto& s = stats[r.horizon];
    ++s.n_records;
    s.n_cases += r.label;
    counts[r.horizon].push_back(static_cast<double>(r.observations.size()));
  }
  for (int h = 0; h <= max_horizon; ++h) {
    const auto& c = counts[h];
    if (c.empty()) continue;
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / c.size();
    double sq = 0.0;
    for (double v : c) sq += (v - mean) * (v - mean);
    stats[h].mean_observations = mean;
    stats[h].std_observations = std::sqrt(sq / c.size());
  }
  return stats;
}

std::string statistics_csv(std::span<const HorizonStats> stats) {
  std::ostringstream out;
  out << "horizon,n_patients,n_cases,case_percent,obs_mean,obs_std\n";
  char line[160];
  for (const auto& s : stats) {
    const double pct = s.n_records ? 100.0 * s.n_cases / s.n_records : 0.0;
    std::snprintf(line, sizeof(line), "%d,%d,%d,%.1f,%.2f,%.2f\n", s.horizon, s.n_records,
                  s.n_cases, pct, s.mean_observations, s.std_observations);
    out << line;
  }
  return out.str();
}

}  // namespace mgpatt
