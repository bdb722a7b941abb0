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

#ifndef MGPATT_DATA_HPP_
#define MGPATT_DATA_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgpatt/mgp.hpp"
#include "mgpatt/series.hpp"

namespace mgpatt {

inline constexpr int kDataFormatVersion = 1;
inline constexpr int kMinObservations = 40;
inline constexpr int kMaxHorizon = 6;

// ---------------------------------------------------------------- features

enum class FeatureKind { kVital, kLab };

struct FeatureInfo {
  int id = 0;
  std::string name;
  FeatureKind kind = FeatureKind::kVital;
};

struct FeatureDictionary {
  std::vector<FeatureInfo> dynamic;
  std::vector<std::string> static_names;

  int n_features() const { return static_cast<int>(dynamic.size()); }
  // Throws LookupError for unknown names.
  int id_of(const std::string& name) const;
};

// The clinical vital and lab names, in the order the generator assigns them.
const std::vector<std::string>& vital_names();
const std::vector<std::string>& lab_names();

// First `n_vitals` vitals then `n_labs` labs; static names are age, gender
// and one entry per admission unit.
FeatureDictionary make_dictionary(int n_vitals, int n_labs, int n_units);

void write_dictionary(const FeatureDictionary& dict, const std::string& path);
FeatureDictionary read_dictionary(const std::string& path);

// -------------------------------------------------------------------- JSONL

// One record per line; see README for the schema. Every record is validated
// on write and on read; violations raise DataError naming the line.
void validate_series(const IrregularSeries& series, int n_features = -1,
                     int n_static = -1);
void write_jsonl(std::ostream& out, std::span<const IrregularSeries> records);
void write_jsonl(const std::string& path, std::span<const IrregularSeries> records);
std::vector<IrregularSeries> read_jsonl(std::istream& in, int n_features = -1,
                                        int n_static = -1);
std::vector<IrregularSeries> read_jsonl(const std::string& path, int n_features = -1,
                                        int n_static = -1);

// --------------------------------------------------------------- generator

struct GeneratorConfig {
  int n_patients = 2000;
  int n_vitals = 3;
  int n_labs = 2;
  int n_units = 3;
  double case_fraction = 0.5;
  double label_effect = 2.0;  // drift amplitude in latent standard deviations
  double drift_hours = 24.0;
  std::vector<int> drift_features = {0, 3};  // ids receiving the case drift
  double vital_rate = 1.0;        // observations per hour
  double lab_rate = 1.0 / 8.0;
  double case_hours_min = 16.0;   // case window, admission to onset
  double case_hours_max = 40.0;
  double control_hours_min = 30.0;
  double control_hours_max = 80.0;
  double vital_lengthscale = 2.0;
  double lab_lengthscale = 64.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Two OU clusters: the first carries the vitals (lengthscale vital_lengthscale)
// and the second the labs (lab_lengthscale), each with unit marginal variance
// plus a small cross-feature correlation inside the group.
MgpParameters synthetic_true_parameters(const GeneratorConfig& config);

// Latent trajectories are drawn from the MGP prior of `truth` at Poisson
// observation times (vitals ~vital_rate, labs ~lab_rate per hour); cases get
// label_effect times a linear ramp over the last drift_hours on the drift
// features. Times are re-referenced so the last observation is at t = 0 and
// admission records the window start. Records are horizon 0, un-normalized.
std::vector<IrregularSeries> generate_synthetic(const GeneratorConfig& config,
                                                const MgpParameters& truth);

// Ground truth sidecar (generator settings and true parameters) as JSON text.
std::string ground_truth_json(const GeneratorConfig& config,
                              const MgpParameters& truth);

// ---------------------------------------------------------------- pipeline

// Copies h = 0..max_horizon with observations t > -h removed and times
// shifted by +h; copies with fewer than min_obs observations are dropped.
std::vector<IrregularSeries> horizon_augment(const IrregularSeries& series,
                                             int max_horizon = kMaxHorizon,
                                             int min_obs = kMinObservations);
std::vector<IrregularSeries> horizon_augment(std::span<const IrregularSeries> series,
                                             int max_horizon = kMaxHorizon,
                                             int min_obs = kMinObservations);

// Pairs each control with a case (1:1, excess controls draw a case with
// replacement), keeps the control's first span_hours(case) hours from
// admission, re-anchors the last kept observation to t = 0, drops controls
// below min_obs and keeps at most max_obs most recent observations.
struct MatchResult {
  std::vector<IrregularSeries> controls;
  std::vector<std::size_t> matched_case;  // per surviving control
  int dropped = 0;
};
MatchResult match_controls(std::span<const IrregularSeries> cases,
                           std::span<const IrregularSeries> controls,
                           std::uint64_t seed, int min_obs = kMinObservations,
                           int max_obs = kMaxObservations);

// Drops records below min_obs and truncates to the most recent max_obs.
std::vector<IrregularSeries> filter_and_cap(std::vector<IrregularSeries> records,
                                            int min_obs = kMinObservations,
                                            int max_obs = kMaxObservations);

struct Normalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  void apply(IrregularSeries& series) const;
};

// Per-feature mean and population std over all observations; std floored
// at 1e-6. Features never observed get mean 0, std 1.
Normalization fit_normalization(std::span<const IrregularSeries> records,
                                int n_features);

struct DatasetSplits {
  std::vector<IrregularSeries> train;
  std::vector<IrregularSeries> validation;
  std::vector<IrregularSeries> test;
  Normalization normalization;
};

// Patient-level split (all records sharing a patient_id stay together) with
// sizes round(f_train n), round(f_val n) and the remainder; normalization is
// fitted on the horizon-0 training records and applied to every split.
// Throws ConfigError with fewer than 10 patients or bad fractions.
DatasetSplits split_normalize(std::vector<IrregularSeries> records, int n_features,
                              std::uint64_t seed, double train_fraction = 0.8,
                              double validation_fraction = 0.1);

// --------------------------------------------------------------- statistics

struct HorizonStats {
  int horizon = 0;
  int n_records = 0;
  int n_cases = 0;
  double mean_observations = 0.0;
  double std_observations = 0.0;
};

std::vector<HorizonStats> dataset_statistics(std::span<const IrregularSeries> records,
                                             int max_horizon = kMaxHorizon);
// CSV with header horizon,n_patients,n_cases,case_percent,obs_mean,obs_std.
std::string statistics_csv(std::span<const HorizonStats> stats);

}  // namespace mgpatt

#endif  // MGPATT_DATA_HPP_
