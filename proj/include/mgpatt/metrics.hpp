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

#ifndef MGPATT_METRICS_HPP_
#define MGPATT_METRICS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mgpatt {

// Mann-Whitney normalization with midranks for ties. Throws
// UndefinedMetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision over the descending-threshold step curve; tied scores
// form one threshold. Throws UndefinedMetricError without positives.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over resamples
};

using MetricFn =
    std::function<double(std::span<const double>, std::span<const int>)>;

// Patient-level resampling with replacement. Resamples on which the metric
// is undefined are redrawn, at most `max_redraws` times in total.
MeanStd bootstrap(const MetricFn& metric, std::span<const double> scores,
                  std::span<const int> labels, int n_resamples,
                  std::uint64_t seed, int max_redraws = 10000);

struct HorizonMetrics {
  int horizon = 0;
  std::optional<MeanStd> auroc;  // nullopt when undefined
  std::optional<MeanStd> aupr;
  int n_cases = 0;
  int n_controls = 0;
};

// Groups by horizon (0..6 always reported) and bootstraps both metrics.
std::vector<HorizonMetrics> per_horizon_report(std::span<const double> scores,
                                               std::span<const int> labels,
                                               std::span<const int> horizons,
                                               int n_resamples,
                                               std::uint64_t seed,
                                               int max_horizon = 6);

// One metrics JSON line (no trailing newline), format_version included.
std::string metrics_json_line(const HorizonMetrics& m);
HorizonMetrics metrics_from_json_line(const std::string& line);

}  // namespace mgpatt

#endif  // MGPATT_METRICS_HPP_
