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

#ifndef MGPATT_BASELINES_HPP_
#define MGPATT_BASELINES_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgpatt/series.hpp"

namespace mgpatt {

inline constexpr int kInsightWindow = 6;
// Correlations involving a row whose standard deviation is at most this
// fraction of its largest magnitude are reported as 0.
inline constexpr double kConstantTolerance = 1e-8;

// Hourly grid, end-aligned: column N-1 is the prediction hour. An observation
// at time t falls into hour floor(-t) before prediction time.
struct HourlyMatrix {
  Eigen::MatrixXd values;    // M x N
  Eigen::MatrixXi presence;  // 1 where the hour holds a real observation
};

// Hourly means, carried forward over empty hours, zero before the first
// observation of each feature. Histories longer than N hours lose their
// oldest hours (after carrying forward).
HourlyMatrix hourly_impute(const IrregularSeries& series, int n_features, int n_hours);

// E[(x-mx)(y-my)(z-mz)] / (sx sy sz) with population moments; 0 if any
// standard deviation is 0. Throws InputError on length mismatch or n < 2.
double triplet_correlation(std::span<const double> x, std::span<const double> y,
                           std::span<const double> z);
// Pearson correlation with the same zero-variance convention.
double pair_correlation(std::span<const double> x, std::span<const double> y);

// Tercile thresholds of the nonzero population (linear interpolation
// between order statistics).
struct TercileThresholds {
  bool empty = true;
  double lower = 0.0;  // q*(1/3)
  double upper = 0.0;  // q*(2/3)
};
TercileThresholds tercile_thresholds(std::span<const double> population);
// +1 above upper, -1 below lower, 0 otherwise (boundaries map to 0).
int discretize(double value, const TercileThresholds& thresholds);

int binomial(int n, int k);
// (N - 5) * (2M + C(M,2) + C(M,3)).
int insight_length(int n_hours, int n_variables);

// Statistics of one six-hour window, in the vector order: means, differences
// (last minus first), pair correlations (i<j, lexicographic), triplet
// correlations (i<j<k, lexicographic).
struct WindowStatistics {
  std::vector<double> means;
  std::vector<double> differences;
  std::vector<double> pairs;
  std::vector<double> triplets;
};
// One entry per window start w = 0..N-6 (stride 1).
std::vector<WindowStatistics> window_statistics(const Eigen::MatrixXd& values);

// One threshold per discretized statistic: M differences, then pairs, then
// triplets, pooled over every patient and window.
struct InsightThresholds {
  std::vector<TercileThresholds> differences;
  std::vector<TercileThresholds> pairs;
  std::vector<TercileThresholds> triplets;
};
InsightThresholds fit_insight_thresholds(std::span<const Eigen::MatrixXd> matrices);

// Window-major flattening: per window, M means then the discretized
// differences, pairs and triplets.
Eigen::VectorXd insight_vector(const Eigen::MatrixXd& values,
                               const InsightThresholds& thresholds);
// Column names matching insight_vector, e.g. w0_mean_heartrate.
std::vector<std::string> insight_feature_names(int n_hours,
                                               const std::vector<std::string>& variables);

// Rows of `feature_ids` from the hourly grid plus, when include_age, a
// constant row holding static feature 0.
Eigen::MatrixXd insight_matrix(const IrregularSeries& series, int n_features,
                               std::span<const int> feature_ids, int n_hours,
                               bool include_age);
// True when every feature in `feature_ids` has an observation with
// t >= -lookback_hours.
bool insight_eligible(const IrregularSeries& series, std::span<const int> feature_ids,
                      double lookback_hours = 5.0);

// Flattened hourly grid (time-major) followed by the static features.
Eigen::VectorXd hourly_features(const IrregularSeries& series, int n_features, int n_hours);

// Ridge logistic regression: mean cross-entropy + 0.5 * l2 * |w|^2, the
// intercept unpenalized, minimized by L-BFGS.
struct LogisticModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
};

struct LogisticOptions {
  double l2 = 1.0;
  double tolerance = 1e-6;
  int max_iterations = 2000;
  int history = 10;
};

// Objective and gradient (weights then intercept) at `theta`.
double logistic_objective(const Eigen::MatrixXd& features, std::span<const int> labels,
                          double l2, const Eigen::VectorXd& theta,
                          Eigen::VectorXd* gradient);

// Throws ConfigError unless both classes are present.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels,
                           const LogisticOptions& options);

// CSV with a header row; rows are patient_id, horizon, label, features.
std::string features_csv(const std::vector<std::string>& names,
                         std::span<const IrregularSeries> records,
                         const Eigen::MatrixXd& features);

}  // namespace mgpatt

#endif  // MGPATT_BASELINES_HPP_
