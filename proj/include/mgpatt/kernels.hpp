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

#ifndef MGPATT_KERNELS_HPP_
#define MGPATT_KERNELS_HPP_

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mgpatt {

// Sum-of-Kronecker multitask prior pieces:
//   cov[(t, k), (t', k')] = sum_l Kk_l(k, k') * Kt_l(t, t') + [same] sigma_k^2
// Only observed (time, feature) pairs are ever materialized; the dense
// Kronecker form lives in the test oracles.

enum class TimeKernelFamily { kOrnsteinUhlenbeck, kSquaredExponential };

std::string_view to_string(TimeKernelFamily family);
TimeKernelFamily time_kernel_family_from_string(std::string_view name);

struct TimeKernelSpec {
  TimeKernelFamily family = TimeKernelFamily::kOrnsteinUhlenbeck;
  double lengthscale = 1.0;  // hours

  // Throws InputError unless lengthscale is finite and positive.
  void validate() const;
};

// OU: exp(-|t1 - t2| / l); SE: exp(-(t1 - t2)^2 / (2 l^2)).
double time_kernel(const TimeKernelSpec& spec, double t1, double t2);

// d time_kernel / d log(lengthscale).
double time_kernel_dlog_lengthscale(const TimeKernelSpec& spec, double t1,
                                    double t2);

// Lower-triangular factor F with K = F Fᵀ. The strictly-lower entries are
// stored as-is; the diagonal is stored raw and mapped through softplus.
class FeatureCovFactor {
 public:
  FeatureCovFactor() = default;
  // Identity factor of the given side.
  explicit FeatureCovFactor(int side);
  // Builds the raw representation from a lower-triangular factor with a
  // strictly positive diagonal. Throws InputError otherwise.
  static FeatureCovFactor from_factor(const Eigen::MatrixXd& lower);

  int side() const { return static_cast<int>(raw_.rows()); }
  Eigen::MatrixXd factor() const;
  const Eigen::MatrixXd& raw() const { return raw_; }
  Eigen::MatrixXd& raw() { return raw_; }

  // Chain rule from dLoss/dK to dLoss/d(raw); upper entries stay zero.
  Eigen::MatrixXd raw_gradient(const Eigen::MatrixXd& cov_grad) const;

 private:
  Eigen::MatrixXd raw_;
};

// K = F Fᵀ.
Eigen::MatrixXd feature_cov(const FeatureCovFactor& factor);

// Per-feature observation noise standard deviations, softplus of raw.
class NoiseScales {
 public:
  NoiseScales() = default;
  explicit NoiseScales(const Eigen::VectorXd& sigma);

  int size() const { return static_cast<int>(raw_.size()); }
  Eigen::VectorXd sigma() const;
  const Eigen::VectorXd& raw() const { return raw_; }
  Eigen::VectorXd& raw() { return raw_; }
  Eigen::VectorXd raw_gradient(const Eigen::VectorXd& sigma_grad) const;

 private:
  Eigen::VectorXd raw_;
};

// One smoothness cluster: a time kernel and a free-form feature covariance.
struct Cluster {
  TimeKernelFamily family = TimeKernelFamily::kOrnsteinUhlenbeck;
  double log_lengthscale = 0.0;
  FeatureCovFactor features;

  double lengthscale() const;
  TimeKernelSpec time_spec() const { return {family, lengthscale()}; }
};

struct ObsPoint {
  double time = 0.0;  // hours
  int feature = 0;
};
using ObservationIndex = std::vector<ObsPoint>;

// Throws InputError on non-finite times or feature ids outside [0, n_features).
void validate_index(const ObservationIndex& index, int n_features);

// Covariance among observed pairs including the noise diagonal.
// Throws InputError("no observations") on an empty index.
Eigen::MatrixXd assemble_observed_cov(const ObservationIndex& index,
                                      std::span<const Cluster> clusters,
                                      const NoiseScales& noise);

// Noise-free covariance between `rows` and `cols` pairs, |rows| x |cols|.
Eigen::MatrixXd cross_cov(const ObservationIndex& rows,
                          const ObservationIndex& cols,
                          std::span<const Cluster> clusters);

// Gradient w.r.t. the natural kernel parameters.
struct KernelGradient {
  std::vector<Eigen::MatrixXd> feature_cov;  // dLoss/dK_l^k, per cluster
  std::vector<double> log_lengthscale;       // per cluster
  Eigen::VectorXd sigma;                     // dLoss/dsigma_k

  KernelGradient() = default;
  KernelGradient(int n_clusters, int n_features);
  KernelGradient& operator+=(const KernelGradient& other);
};

// Accumulates the pullback of `cov_grad` (same shape as cross_cov(rows,
// cols)) through cross_cov.
void accumulate_cross_cov_gradient(const ObservationIndex& rows,
                                   const ObservationIndex& cols,
                                   std::span<const Cluster> clusters,
                                   const Eigen::MatrixXd& cov_grad,
                                   KernelGradient& grad);

// Same for assemble_observed_cov, including the noise diagonal.
void accumulate_observed_cov_gradient(const ObservationIndex& index,
                                      std::span<const Cluster> clusters,
                                      const NoiseScales& noise,
                                      const Eigen::MatrixXd& cov_grad,
                                      KernelGradient& grad);

}  // namespace mgpatt

#endif  // MGPATT_KERNELS_HPP_
