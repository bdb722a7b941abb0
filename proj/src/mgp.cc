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

#include "mgpatt/mgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mgpatt/errors.hpp"
#include "mgpatt/random.hpp"

namespace mgpatt {

void MgpParameters::validate() const {
  if (clusters.empty()) throw InputError("MGP needs at least one cluster");
  const int m = n_features();
  if (m <= 0) throw InputError("MGP needs at least one feature");
  for (const Cluster& c : clusters) {
    if (c.features.side() != m)
      throw InputError("cluster feature factor side differs from noise size");
    c.time_spec().validate();
  }
}

MgpParameters MgpParameters::make(int n_features,
                                  std::span<const double> lengthscales,
                                  TimeKernelFamily family, double factor_scale,
                                  double noise_sigma) {
  MgpParameters p;
  for (double l : lengthscales) {
    Cluster c;
    c.family = family;
    c.log_lengthscale = std::log(l);
    c.features = FeatureCovFactor::from_factor(
        factor_scale * Eigen::MatrixXd::Identity(n_features, n_features));
    p.clusters.push_back(std::move(c));
  }
  p.noise = NoiseScales(Eigen::VectorXd::Constant(n_features, noise_sigma));
  p.validate();
  return p;
}

MgpParameters MgpParameters::zeros_like() const {
  MgpParameters z = *this;
  z.visit([](const std::string&, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return z;
}

MgpParameters raw_gradient(const MgpParameters& params,
                           const KernelGradient& grad) {
  MgpParameters out = params.zeros_like();
  for (std::size_t l = 0; l < params.clusters.size(); ++l) {
    out.clusters[l].log_lengthscale = grad.log_lengthscale[l];
    out.clusters[l].features.raw() =
        params.clusters[l].features.raw_gradient(grad.feature_cov[l]);
  }
  out.noise.raw() = params.noise.raw_gradient(grad.sigma);
  return out;
}

int Grid::n_valid() const {
  return static_cast<int>(std::count(padded.begin(), padded.end(), false));
}

Grid build_grid(const IrregularSeries& series, int n_grid, int n_features) {
  if (n_grid < 1) throw InputError("grid needs at least one row");
  Grid grid;
  grid.n_rows = n_grid;
  grid.n_features = n_features;
  grid.index.reserve(static_cast<std::size_t>(n_grid) * n_features);
  for (int row = 0; row < n_grid; ++row) {
    const double t = -kGridSpacingHours * (n_grid - 1 - row);
    for (int k = 0; k < n_features; ++k) grid.index.push_back({t, k});
  }
  const double span = series.span_hours();
  const int valid =
      std::clamp(static_cast<int>(std::ceil(span / kGridSpacingHours - 1e-9)),
                 1, n_grid);
  grid.padded.assign(n_grid, false);
  for (int row = 0; row < n_grid - valid; ++row) grid.padded[row] = true;
  return grid;
}

ObservedData select_observations(const IrregularSeries& series,
                                 int n_features, int max_observations) {
  std::vector<Observation> obs = series.observations;
  for (const Observation& o : obs) {
    if (!std::isfinite(o.t) || !std::isfinite(o.value))
      throw InputError("non-finite observation in " + series.patient_id);
    if (o.t > 1e-9)
      throw InputError("observation after prediction time in " +
                       series.patient_id);
  }
  std::stable_sort(obs.begin(), obs.end(),
                   [](const Observation& a, const Observation& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return a.feature < b.feature;
                   });
  const std::size_t keep =
      std::min(obs.size(), static_cast<std::size_t>(max_observations));
  const std::size_t first = obs.size() - keep;
  ObservedData out;
  out.index.reserve(keep);
  out.values.resize(static_cast<Eigen::Index>(keep));
  for (std::size_t i = 0; i < keep; ++i) {
    const Observation& o = obs[first + i];
    out.index.push_back({o.t, o.feature});
    out.values[static_cast<Eigen::Index>(i)] = o.value;
  }
  validate_index(out.index, n_features);
  return out;
}

Eigen::MatrixXd grid_prior_cov(const MgpParameters& params, int n_grid) {
  IrregularSeries empty;
  const Grid grid = build_grid(empty, n_grid, params.n_features());
  return cross_cov(grid.index, grid.index, params.clusters);
}

PosteriorGaussian posterior(const IrregularSeries& series,
                            const MgpParameters& params, int n_grid,
                            PosteriorWork* work,
                            const Eigen::MatrixXd* grid_prior) {
  params.validate();
  const int m = params.n_features();
  PosteriorGaussian post;
  post.grid = build_grid(series, n_grid, m);
  PosteriorWork local;
  PosteriorWork& w = work ? *work : local;
  w = PosteriorWork{};
  w.observed = select_observations(series, m);

  const Eigen::Index g = static_cast<Eigen::Index>(post.grid.index.size());
  post.cov = grid_prior ? *grid_prior
                        : cross_cov(post.grid.index, post.grid.index,
                                    params.clusters);
  if (post.cov.rows() != g) throw InputError("grid prior has the wrong size");

  if (w.observed.index.empty()) {
    post.mean = Eigen::VectorXd::Zero(g);
    return post;
  }
  const Eigen::MatrixXd k_obs =
      assemble_observed_cov(w.observed.index, params.clusters, params.noise);
  w.obs_chol = jittered_cholesky(k_obs).lower;
  w.weights = cholesky_solve(w.obs_chol, w.observed.values);
  w.cross = cross_cov(post.grid.index, w.observed.index, params.clusters);
  w.solved = cholesky_solve(w.obs_chol, w.cross.transpose());
  post.mean = w.cross * w.weights;
  post.cov.noalias() -= w.cross * w.solved;
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

void posterior_backward(const PosteriorWork& work, const PosteriorGaussian& post,
                        const MgpParameters& params,
                        const Eigen::VectorXd& mean_grad,
                        const Eigen::MatrixXd& cov_grad, KernelGradient& grad,
                        Eigen::MatrixXd* grid_prior_grad) {
  if (grid_prior_grad) {
    *grid_prior_grad += cov_grad;
  } else {
    accumulate_cross_cov_gradient(post.grid.index, post.grid.index,
                                  params.clusters, cov_grad, grad);
  }
  if (work.observed.index.empty()) return;

  const Eigen::MatrixXd sym = cov_grad + cov_grad.transpose();
  Eigen::MatrixXd cross_grad = mean_grad * work.weights.transpose();
  cross_grad.noalias() -= sym * work.solved.transpose();
  accumulate_cross_cov_gradient(post.grid.index, work.observed.index,
                                params.clusters, cross_grad, grad);

  const Eigen::VectorXd solved_mean = work.solved * mean_grad;
  const Eigen::MatrixXd tmp = work.solved * cov_grad;
  Eigen::MatrixXd obs_grad = tmp * work.solved.transpose();
  obs_grad.noalias() -= solved_mean * work.weights.transpose();
  accumulate_observed_cov_gradient(work.observed.index, params.clusters,
                                   params.noise, obs_grad, grad);
}

void grid_prior_backward(const MgpParameters& params, int n_grid,
                         const Eigen::MatrixXd& cov_grad,
                         KernelGradient& grad) {
  IrregularSeries empty;
  const Grid grid = build_grid(empty, n_grid, params.n_features());
  accumulate_cross_cov_gradient(grid.index, grid.index, params.clusters,
                                cov_grad, grad);
}

GridSampleBatch sample(const PosteriorGaussian& post,
                       const Eigen::VectorXd& static_features, int s_count,
                       std::uint64_t seed) {
  if (s_count < 1) throw InputError("need at least one Monte Carlo sample");
  const Grid& grid = post.grid;
  const int m = grid.n_features;
  const Eigen::Index q = static_features.size();
  const Eigen::Index g = post.mean.size();

  GridSampleBatch batch;
  batch.n_features = m;
  batch.padded = grid.padded;
  if (post.cov.isZero(0.0)) {
    batch.chol = Eigen::MatrixXd::Zero(g, g);
  } else {
    batch.chol = jittered_cholesky(post.cov).lower;
  }
  Rng rng(seed);
  batch.noise_draws = standard_normal(s_count, g, rng);
  Eigen::MatrixXd draws =
      batch.chol.triangularView<Eigen::Lower>() * batch.noise_draws.transpose();
  draws.colwise() += post.mean;

  batch.samples.reserve(s_count);
  for (int s = 0; s < s_count; ++s) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(grid.n_rows, m + q);
    for (int row = 0; row < grid.n_rows; ++row) {
      if (grid.padded[row]) continue;
      for (int k = 0; k < m; ++k) y(row, k) = draws(row * m + k, s);
      y.row(row).tail(q) = static_features.transpose();
    }
    batch.samples.push_back(std::move(y));
  }
  return batch;
}

void sample_backward(const GridSampleBatch& batch,
                     std::span<const Eigen::MatrixXd> sample_grads,
                     Eigen::VectorXd& mean_grad, Eigen::MatrixXd& cov_grad) {
  const Eigen::Index s_count = batch.noise_draws.rows();
  const Eigen::Index g = batch.noise_draws.cols();
  const int m = batch.n_features;
  if (static_cast<Eigen::Index>(sample_grads.size()) != s_count)
    throw InputError("one gradient per Monte Carlo sample is required");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g, s_count);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const Eigen::MatrixXd& gy = sample_grads[s];
    for (Eigen::Index row = 0; row < gy.rows(); ++row) {
      if (batch.padded[row]) continue;
      for (int k = 0; k < m; ++k) d(row * m + k, s) = gy(row, k);
    }
  }
  mean_grad = d.rowwise().sum();
  if (batch.chol.isZero(0.0)) {
    cov_grad = Eigen::MatrixXd::Zero(g, g);
    return;
  }
  Eigen::MatrixXd chol_grad = d * batch.noise_draws;
  chol_grad.triangularView<Eigen::StrictlyUpper>().setZero();
  cov_grad = cholesky_backward(batch.chol, chol_grad);
}

double log_marginal_likelihood(const IrregularSeries& series,
                               const MgpParameters& params,
                               KernelGradient* grad) {
  params.validate();
  const ObservedData obs = select_observations(series, params.n_features());
  if (obs.index.empty()) return 0.0;
  const Eigen::MatrixXd k =
      assemble_observed_cov(obs.index, params.clusters, params.noise);
  const Eigen::MatrixXd chol = jittered_cholesky(k).lower;
  const Eigen::VectorXd alpha = cholesky_solve(chol, obs.values);
  const double n = static_cast<double>(obs.values.size());
  const double value = -0.5 * obs.values.dot(alpha) -
                       chol.diagonal().array().log().sum() -
                       0.5 * n * std::log(2.0 * std::numbers::pi);
  if (grad) {
    const Eigen::MatrixXd k_inv = cholesky_solve(
        chol, Eigen::MatrixXd::Identity(k.rows(), k.cols()));
    const Eigen::MatrixXd k_grad = 0.5 * (alpha * alpha.transpose() - k_inv);
    accumulate_observed_cov_gradient(obs.index, params.clusters, params.noise,
                                     k_grad, *grad);
  }
  return value;
}

}  // namespace mgpatt
