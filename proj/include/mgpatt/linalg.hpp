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

#ifndef MGPATT_LINALG_HPP_
#define MGPATT_LINALG_HPP_

#include <Eigen/Dense>

namespace mgpatt {

struct JitterPolicy {
  double initial = 1e-6;
  double maximum = 1e-2;
};

// Lower Cholesky factor of (a + jitter * I). Starts at policy.initial and
// doubles until the factorization succeeds; throws NumericalError once the
// jitter would exceed policy.maximum.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a,
                                   const JitterPolicy& policy = {});

// Reverse-mode step through A = L Lᵀ. Given L and dLoss/dL (only the lower
// triangle is read) returns the symmetric dLoss/dA.
Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& lower,
                                  const Eigen::MatrixXd& lower_grad);

// Solves (L Lᵀ) X = B.
Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower,
                               const Eigen::MatrixXd& rhs);

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus_inverse(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

}  // namespace mgpatt

#endif  // MGPATT_LINALG_HPP_
