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

#ifndef MGPATT_SERIES_HPP_
#define MGPATT_SERIES_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mgpatt {

struct Observation {
  double t = 0.0;  // hours relative to prediction time, <= 0
  int feature = 0;
  double value = 0.0;
};

// One patient encounter (or one horizon copy of it).
struct IrregularSeries {
  std::string patient_id;
  std::vector<Observation> observations;
  Eigen::VectorXd static_features;
  int label = 0;
  int horizon = 0;
  // Admission time relative to prediction time, when known.
  std::optional<double> admission;

  // Hours from admission (or the first observation) to prediction time.
  double span_hours() const;
  // Observations ordered by (t, feature); ties keep their input order.
  void sort_observations();
};

}  // namespace mgpatt

#endif  // MGPATT_SERIES_HPP_
