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

#include "mgpatt/linalg.hpp"

#include <cmath>
#include <sstream>

#include "mgpatt/errors.hpp"

namespace mgpatt {

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a,
                                   const JitterPolicy& policy) {
  const Eigen::Index n = a.rows();
  if (n == 0) return {Eigen::MatrixXd(0, 0), 0.0};
  for (double jitter = policy.initial; jitter <= policy.maximum * (1 + 1e-12);
       jitter *= 2.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.allFinite()) return {std::move(lower), jitter};
    }
  }
  std::ostringstream msg;
  msg << "cholesky failed up to jitter " << policy.maximum << " (side " << n
      << ", diag range [" << a.diagonal().minCoeff() << ", "
      << a.diagonal().maxCoeff() << "])";
  throw NumericalError(msg.str());
}

Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& lower,
                                  const Eigen::MatrixXd& lower_grad) {
  const Eigen::Index n = lower.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  // phi(Lᵀ L̄): lower triangle with the diagonal halved.
  Eigen::MatrixXd phi =
      lower.transpose() * lower_grad.triangularView<Eigen::Lower>();
  phi.triangularView<Eigen::StrictlyUpper>().setZero();
  phi.diagonal() *= 0.5;
  // L⁻ᵀ phi L⁻¹
  const auto tri = lower.triangularView<Eigen::Lower>();
  tri.transpose().solveInPlace(phi);
  Eigen::MatrixXd out = phi.transpose();
  tri.transpose().solveInPlace(out);
  // out is now (L⁻ᵀ phi L⁻¹)ᵀ; symmetrize.
  Eigen::MatrixXd sym = 0.5 * (out + out.transpose());
  return sym;
}

Eigen::MatrixXd cholesky_solve(const Eigen::MatrixXd& lower,
                               const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd x = rhs;
  const auto tri = lower.triangularView<Eigen::Lower>();
  tri.solveInPlace(x);
  tri.transpose().solveInPlace(x);
  return x;
}

}  // namespace mgpatt
