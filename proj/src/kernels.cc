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

#include "mgpatt/kernels.hpp"

#include <cmath>
#include <string>

#include "mgpatt/errors.hpp"
#include "mgpatt/linalg.hpp"

namespace mgpatt {

std::string_view to_string(TimeKernelFamily family) {
  switch (family) {
    case TimeKernelFamily::kOrnsteinUhlenbeck:
      return "ou";
    case TimeKernelFamily::kSquaredExponential:
      return "se";
  }
  return "ou";
}

TimeKernelFamily time_kernel_family_from_string(std::string_view name) {
  if (name == "ou") return TimeKernelFamily::kOrnsteinUhlenbeck;
  if (name == "se") return TimeKernelFamily::kSquaredExponential;
  throw ConfigError("unknown time kernel family '" + std::string(name) + "'");
}

void TimeKernelSpec::validate() const {
  if (!std::isfinite(lengthscale) || lengthscale <= 0.0)
    throw InputError("time kernel lengthscale must be positive and finite");
}

namespace {

// Hot-loop form of the time kernel. `inv` is 1/l for OU and 1/(2 l^2) for SE.
struct KernelEval {
  bool se = false;
  double inv = 1.0;

  explicit KernelEval(const TimeKernelSpec& spec)
      : se(spec.family == TimeKernelFamily::kSquaredExponential),
        inv(se ? 0.5 / (spec.lengthscale * spec.lengthscale)
               : 1.0 / spec.lengthscale) {}

  double value(double dt) const {
    return se ? std::exp(-dt * dt * inv) : std::exp(-std::abs(dt) * inv);
  }
  // d value / d log l, given the value.
  double dlog(double dt, double v) const {
    return se ? v * dt * dt * 2.0 * inv : v * std::abs(dt) * inv;
  }
};

void check_time(double t) {
  if (!std::isfinite(t)) throw InputError("non-finite time in kernel input");
}

struct ClusterCache {
  std::vector<KernelEval> time;
  std::vector<Eigen::MatrixXd> features;
};

ClusterCache make_cache(std::span<const Cluster> clusters) {
  ClusterCache cache;
  cache.time.reserve(clusters.size());
  cache.features.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    const TimeKernelSpec spec = c.time_spec();
    spec.validate();
    cache.time.emplace_back(spec);
    cache.features.push_back(feature_cov(c.features));
  }
  return cache;
}

int feature_side(std::span<const Cluster> clusters) {
  if (clusters.empty()) throw InputError("at least one cluster is required");
  const int side = clusters.front().features.side();
  for (const Cluster& c : clusters)
    if (c.features.side() != side)
      throw InputError("clusters disagree on the number of features");
  return side;
}

}  // namespace

double time_kernel(const TimeKernelSpec& spec, double t1, double t2) {
  spec.validate();
  check_time(t1);
  check_time(t2);
  return KernelEval(spec).value(t1 - t2);
}

double time_kernel_dlog_lengthscale(const TimeKernelSpec& spec, double t1,
                                    double t2) {
  spec.validate();
  check_time(t1);
  check_time(t2);
  const KernelEval eval(spec);
  const double dt = t1 - t2;
  return eval.dlog(dt, eval.value(dt));
}

FeatureCovFactor::FeatureCovFactor(int side)
    : raw_(Eigen::MatrixXd::Zero(side, side)) {
  raw_.diagonal().setConstant(softplus_inverse(1.0));
}

FeatureCovFactor FeatureCovFactor::from_factor(const Eigen::MatrixXd& lower) {
  if (lower.rows() != lower.cols())
    throw InputError("feature covariance factor must be square");
  FeatureCovFactor out;
  out.raw_ = lower.triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0))
      throw InputError("feature covariance factor needs a positive diagonal");
    out.raw_(i, i) = softplus_inverse(lower(i, i));
  }
  return out;
}

Eigen::MatrixXd FeatureCovFactor::factor() const {
  Eigen::MatrixXd f = raw_.triangularView<Eigen::StrictlyLower>();
  for (Eigen::Index i = 0; i < raw_.rows(); ++i) f(i, i) = softplus(raw_(i, i));
  return f;
}

Eigen::MatrixXd FeatureCovFactor::raw_gradient(
    const Eigen::MatrixXd& cov_grad) const {
  const Eigen::MatrixXd f = factor();
  Eigen::MatrixXd g = (cov_grad + cov_grad.transpose()) * f;
  g.triangularView<Eigen::StrictlyUpper>().setZero();
  for (Eigen::Index i = 0; i < raw_.rows(); ++i)
    g(i, i) *= softplus_grad(raw_(i, i));
  return g;
}

Eigen::MatrixXd feature_cov(const FeatureCovFactor& factor) {
  const Eigen::MatrixXd f = factor.factor();
  return f * f.transpose();
}

NoiseScales::NoiseScales(const Eigen::VectorXd& sigma) : raw_(sigma.size()) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw InputError("noise scales must be positive");
    raw_[i] = softplus_inverse(sigma[i]);
  }
}

Eigen::VectorXd NoiseScales::sigma() const {
  return raw_.unaryExpr([](double r) { return softplus(r); });
}

Eigen::VectorXd NoiseScales::raw_gradient(
    const Eigen::VectorXd& sigma_grad) const {
  Eigen::VectorXd g(raw_.size());
  for (Eigen::Index i = 0; i < raw_.size(); ++i)
    g[i] = sigma_grad[i] * softplus_grad(raw_[i]);
  return g;
}

double Cluster::lengthscale() const { return std::exp(log_lengthscale); }

void validate_index(const ObservationIndex& index, int n_features) {
  for (const ObsPoint& p : index) {
    check_time(p.time);
    if (p.feature < 0 || p.feature >= n_features)
      throw InputError("feature id " + std::to_string(p.feature) +
                       " outside [0, " + std::to_string(n_features) + ")");
  }
}

Eigen::MatrixXd cross_cov(const ObservationIndex& rows,
                          const ObservationIndex& cols,
                          std::span<const Cluster> clusters) {
  const int m = feature_side(clusters);
  validate_index(rows, m);
  validate_index(cols, m);
  const ClusterCache cache = make_cache(clusters);
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nr, nc);
  for (std::size_t l = 0; l < clusters.size(); ++l) {
    const KernelEval& kt = cache.time[l];
    const Eigen::MatrixXd& kk = cache.features[l];
    for (Eigen::Index j = 0; j < nc; ++j) {
      const ObsPoint& b = cols[j];
      for (Eigen::Index i = 0; i < nr; ++i) {
        const ObsPoint& a = rows[i];
        out(i, j) += kk(a.feature, b.feature) * kt.value(a.time - b.time);
      }
    }
  }
  return out;
}

Eigen::MatrixXd assemble_observed_cov(const ObservationIndex& index,
                                      std::span<const Cluster> clusters,
                                      const NoiseScales& noise) {
  if (index.empty()) throw InputError("no observations");
  const int m = feature_side(clusters);
  if (noise.size() != m)
    throw InputError("noise scales do not match the number of features");
  validate_index(index, m);
  const ClusterCache cache = make_cache(clusters);
  const Eigen::Index n = static_cast<Eigen::Index>(index.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t l = 0; l < clusters.size(); ++l) {
    const KernelEval& kt = cache.time[l];
    const Eigen::MatrixXd& kk = cache.features[l];
    // Fill the lower triangle and mirror, so the result is exactly symmetric.
    for (Eigen::Index j = 0; j < n; ++j) {
      const ObsPoint& b = index[j];
      for (Eigen::Index i = j; i < n; ++i) {
        const ObsPoint& a = index[i];
        out(i, j) += kk(a.feature, b.feature) * kt.value(a.time - b.time);
      }
    }
  }
  const Eigen::VectorXd sigma = noise.sigma();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = sigma[index[i].feature];
    out(i, i) += s * s;
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

KernelGradient::KernelGradient(int n_clusters, int n_features)
    : feature_cov(n_clusters, Eigen::MatrixXd::Zero(n_features, n_features)),
      log_lengthscale(n_clusters, 0.0),
      sigma(Eigen::VectorXd::Zero(n_features)) {}

KernelGradient& KernelGradient::operator+=(const KernelGradient& other) {
  for (std::size_t l = 0; l < feature_cov.size(); ++l) {
    feature_cov[l] += other.feature_cov[l];
    log_lengthscale[l] += other.log_lengthscale[l];
  }
  sigma += other.sigma;
  return *this;
}

void accumulate_cross_cov_gradient(const ObservationIndex& rows,
                                   const ObservationIndex& cols,
                                   std::span<const Cluster> clusters,
                                   const Eigen::MatrixXd& cov_grad,
                                   KernelGradient& grad) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
  if (cov_grad.rows() != nr || cov_grad.cols() != nc)
    throw InputError("covariance gradient has the wrong shape");
  const ClusterCache cache = make_cache(clusters);
  for (std::size_t l = 0; l < clusters.size(); ++l) {
    const KernelEval& kt = cache.time[l];
    const Eigen::MatrixXd& kk = cache.features[l];
    Eigen::MatrixXd& dkk = grad.feature_cov[l];
    double dlog = 0.0;
    for (Eigen::Index j = 0; j < nc; ++j) {
      const ObsPoint& b = cols[j];
      for (Eigen::Index i = 0; i < nr; ++i) {
        const double g = cov_grad(i, j);
        if (g == 0.0) continue;
        const ObsPoint& a = rows[i];
        const double dt = a.time - b.time;
        const double v = kt.value(dt);
        dkk(a.feature, b.feature) += g * v;
        dlog += g * kk(a.feature, b.feature) * kt.dlog(dt, v);
      }
    }
    grad.log_lengthscale[l] += dlog;
  }
}

void accumulate_observed_cov_gradient(const ObservationIndex& index,
                                      std::span<const Cluster> clusters,
                                      const NoiseScales& noise,
                                      const Eigen::MatrixXd& cov_grad,
                                      KernelGradient& grad) {
  accumulate_cross_cov_gradient(index, index, clusters, cov_grad, grad);
  const Eigen::VectorXd sigma = noise.sigma();
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int k = index[i].feature;
    grad.sigma[k] += 2.0 * sigma[k] * cov_grad(i, i);
  }
}

}  // namespace mgpatt
