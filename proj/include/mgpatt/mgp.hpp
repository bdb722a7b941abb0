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

#ifndef MGPATT_MGP_HPP_
#define MGPATT_MGP_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgpatt/kernels.hpp"
#include "mgpatt/linalg.hpp"
#include "mgpatt/series.hpp"

namespace mgpatt {

inline constexpr int kDefaultGridSize = 25;
inline constexpr int kDefaultClusters = 2;
inline constexpr int kMaxObservations = 250;
inline constexpr double kGridSpacingHours = 1.0;

// Trainable state of the multitask GP layer. Also used as its own gradient
// type: visit() walks the raw (unconstrained) parameters in a fixed order.
struct MgpParameters {
  std::vector<Cluster> clusters;
  NoiseScales noise;

  int n_features() const { return noise.size(); }

  // Throws InputError when clusters disagree on M or lengthscales are bad.
  void validate() const;

  // Identity-ish initialization: factor = scale * I, given lengthscales.
  static MgpParameters make(int n_features, std::span<const double> lengthscales,
                            TimeKernelFamily family, double factor_scale,
                            double noise_sigma);

  MgpParameters zeros_like() const;

  template <typename F>
  void visit(F&& f) {
    for (std::size_t l = 0; l < clusters.size(); ++l) {
      const std::string prefix = "mgp.cluster" + std::to_string(l);
      f(prefix + ".log_lengthscale",
        std::span<double>(&clusters[l].log_lengthscale, 1));
      Eigen::MatrixXd& raw = clusters[l].features.raw();
      f(prefix + ".factor_raw", std::span<double>(raw.data(), raw.size()));
    }
    f(std::string("mgp.noise_raw"),
      std::span<double>(noise.raw().data(), noise.raw().size()));
  }
};

// Converts natural-parameter gradients to raw-parameter gradients.
MgpParameters raw_gradient(const MgpParameters& params,
                           const KernelGradient& grad);

// Regular grid t' = -(N-1), ..., 0 hours crossed with all features,
// time-major: pair g = row * M + feature.
struct Grid {
  ObservationIndex index;
  std::vector<bool> padded;  // per row; true for zero-padded leading rows
  int n_rows = 0;
  int n_features = 0;
  int n_valid() const;
};

Grid build_grid(const IrregularSeries& series, int n_grid, int n_features);

// Observed pairs used for conditioning: the most recent kMaxObservations,
// ordered by (t, feature).
struct ObservedData {
  ObservationIndex index;
  Eigen::VectorXd values;
};
ObservedData select_observations(const IrregularSeries& series,
                                 int n_features,
                                 int max_observations = kMaxObservations);

struct PosteriorGaussian {
  Eigen::VectorXd mean;  // length G = N * M
  Eigen::MatrixXd cov;   // G x G
  Grid grid;
};

// Intermediates kept for the reverse pass.
struct PosteriorWork {
  ObservedData observed;
  Eigen::MatrixXd obs_chol;  // jittered Cholesky of the observed covariance
  Eigen::VectorXd weights;   // K_obs^{-1} y
  Eigen::MatrixXd cross;     // K_grid,obs (G x n)
  Eigen::MatrixXd solved;    // K_obs^{-1} K_obs,grid (n x G)
};

// Noise-free prior covariance over the full grid; patient independent.
Eigen::MatrixXd grid_prior_cov(const MgpParameters& params, int n_grid);

// mu = K_c K^{-1} y, Sigma = K_g - K_c K^{-1} K_cᵀ. `grid_prior` may be
// passed to reuse grid_prior_cov across patients. Throws NumericalError if the
// observed covariance cannot be factorized at the maximum jitter.
PosteriorGaussian posterior(const IrregularSeries& series,
                            const MgpParameters& params,
                            int n_grid = kDefaultGridSize,
                            PosteriorWork* work = nullptr,
                            const Eigen::MatrixXd* grid_prior = nullptr);

// Pullback of (dLoss/dmu, dLoss/dSigma) into `grad`. When `grid_prior_grad`
// is non-null the K_grid term is added there instead of being expanded into
// kernel gradients, so a batch can expand it once.
void posterior_backward(const PosteriorWork& work, const PosteriorGaussian& post,
                        const MgpParameters& params,
                        const Eigen::VectorXd& mean_grad,
                        const Eigen::MatrixXd& cov_grad, KernelGradient& grad,
                        Eigen::MatrixXd* grid_prior_grad = nullptr);

// Expands a gradient w.r.t. grid_prior_cov into kernel gradients.
void grid_prior_backward(const MgpParameters& params, int n_grid,
                         const Eigen::MatrixXd& cov_grad, KernelGradient& grad);

struct GridSampleBatch {
  std::vector<Eigen::MatrixXd> samples;  // S matrices, N x (M + Q)
  Eigen::MatrixXd noise_draws;           // S x G standard normals
  std::vector<bool> padded;              // per grid row
  Eigen::MatrixXd chol;                  // factor used for the draws (G x G)
  int n_features = 0;
};

// Reparameterized draws mu + L eps. Static features fill the trailing Q
// channels of unpadded rows; padded rows are zero in every channel.
GridSampleBatch sample(const PosteriorGaussian& post,
                       const Eigen::VectorXd& static_features, int s_count,
                       std::uint64_t seed);

// Pullback of per-sample gradients (N x (M+Q) each) to (dmu, dSigma).
void sample_backward(const GridSampleBatch& batch,
                     std::span<const Eigen::MatrixXd> sample_grads,
                     Eigen::VectorXd& mean_grad, Eigen::MatrixXd& cov_grad);

// log N(y | 0, K_obs), optionally accumulating its gradient.
double log_marginal_likelihood(const IrregularSeries& series,
                               const MgpParameters& params,
                               KernelGradient* grad = nullptr);

}  // namespace mgpatt

#endif  // MGPATT_MGP_HPP_
