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

#include "mgpatt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "mgpatt/errors.hpp"

namespace mgpatt {

HourlyMatrix hourly_impute(const IrregularSeries& series, int n_features, int n_hours) {
  if (n_features < 1 || n_hours < 1) throw InputError("hourly_impute: empty grid");
  int history = n_hours;
  for (const auto& o : series.observations) {
    if (!std::isfinite(o.t) || o.t > 0.0) throw InputError("observation time must be <= 0");
    if (o.feature < 0 || o.feature >= n_features) throw InputError("feature id out of range");
    history = std::max(history, static_cast<int>(std::floor(-o.t)) + 1);
  }
  // Bin b holds hour [-(b+1), -b); column c = history - 1 - b.
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_features, history);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(n_features, history);
  for (const auto& o : series.observations) {
    const int c = history - 1 - static_cast<int>(std::floor(-o.t));
    sum(o.feature, c) += o.value;
    count(o.feature, c) += 1;
  }
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n_features, history);
  for (int f = 0; f < n_features; ++f) {
    bool seen = false;
    for (int c = 0; c < history; ++c) {
      if (count(f, c) > 0) {
        full(f, c) = sum(f, c) / count(f, c);
        seen = true;
      } else if (seen) {
        full(f, c) = full(f, c - 1);
      }
    }
  }
  HourlyMatrix out;
  out.values = full.rightCols(n_hours);
  out.presence = (count.rightCols(n_hours).array() > 0).cast<int>();
  return out;
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw InputError("correlation: length mismatch");
  if (a < 2) throw InputError("correlation: need at least two values");
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double std_of(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return std::sqrt(s / static_cast<double>(x.size()));
}

// A row counts as constant when its spread is rounding noise relative to its
// magnitude; carried-forward windows are constant up to the mean's rounding.
bool degenerate(std::span<const double> x, double sd) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  return sd <= kConstantTolerance * scale;
}

}  // namespace

double pair_correlation(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size());
  const double mx = mean_of(x), my = mean_of(y);
  const double sx = std_of(x, mx), sy = std_of(y, my);
  if (degenerate(x, sx) || degenerate(y, sy)) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size()) / (sx * sy);
}

double triplet_correlation(std::span<const double> x, std::span<const double> y,
                           std::span<const double> z) {
  check_lengths(x.size(), y.size());
  check_lengths(x.size(), z.size());
  const double mx = mean_of(x), my = mean_of(y), mz = mean_of(z);
  const double sx = std_of(x, mx), sy = std_of(y, my), sz = std_of(z, mz);
  if (degenerate(x, sx) || degenerate(y, sy) || degenerate(z, sz)) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my) * (z[i] - mz);
  return s / static_cast<double>(x.size()) / (sx * sy * sz);
}

TercileThresholds tercile_thresholds(std::span<const double> population) {
  std::vector<double> nonzero;
  for (double v : population)
    if (v != 0.0) nonzero.push_back(v);
  TercileThresholds t;
  if (nonzero.empty()) return t;
  std::sort(nonzero.begin(), nonzero.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(nonzero.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, nonzero.size() - 1);
    return nonzero[lo] + (pos - static_cast<double>(lo)) * (nonzero[hi] - nonzero[lo]);
  };
  t.empty = false;
  t.lower = quantile(1.0 / 3.0);
  t.upper = quantile(2.0 / 3.0);
  return t;
}

int discretize(double value, const TercileThresholds& t) {
  if (t.empty) return 0;
  if (value > t.upper) return 1;
  if (value < t.lower) return -1;
  return 0;
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

int insight_length(int n_hours, int n_variables) {
  if (n_hours < kInsightWindow) throw InputError("InSight needs at least 6 hours");
  return (n_hours - (kInsightWindow - 1)) *
         (2 * n_variables + binomial(n_variables, 2) + binomial(n_variables, 3));
}

std::vector<WindowStatistics> window_statistics(const Eigen::MatrixXd& values) {
  const int m = static_cast<int>(values.rows());
  const int n = static_cast<int>(values.cols());
  if (n < kInsightWindow) throw InputError("InSight needs at least 6 hours");
  std::vector<WindowStatistics> out;
  std::vector<std::vector<double>> rows(m, std::vector<double>(kInsightWindow));
  for (int w = 0; w + kInsightWindow <= n; ++w) {
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < kInsightWindow; ++c) rows[i][c] = values(i, w + c);
    WindowStatistics s;
    for (int i = 0; i < m; ++i) {
      s.means.push_back(mean_of(rows[i]));
      s.differences.push_back(rows[i].back() - rows[i].front());
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) s.pairs.push_back(pair_correlation(rows[i], rows[j]));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k)
          s.triplets.push_back(triplet_correlation(rows[i], rows[j], rows[k]));
    out.push_back(std::move(s));
  }
  return out;
}

InsightThresholds fit_insight_thresholds(std::span<const Eigen::MatrixXd> matrices) {
  if (matrices.empty()) throw InputError("no matrices for InSight thresholds");
  const int m = static_cast<int>(matrices.front().rows());
  std::vector<std::vector<double>> diffs(m), pairs(binomial(m, 2)), triplets(binomial(m, 3));
  for (const auto& mat : matrices) {
    if (mat.rows() != m) throw InputError("InSight matrices disagree on variables");
    for (const auto& s : window_statistics(mat)) {
      for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i].push_back(s.differences[i]);
      for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].push_back(s.pairs[i]);
      for (std::size_t i = 0; i < triplets.size(); ++i) triplets[i].push_back(s.triplets[i]);
    }
  }
  InsightThresholds t;
  for (const auto& p : diffs) t.differences.push_back(tercile_thresholds(p));
  for (const auto& p : pairs) t.pairs.push_back(tercile_thresholds(p));
  for (const auto& p : triplets) t.triplets.push_back(tercile_thresholds(p));
  return t;
}

Eigen::VectorXd insight_vector(const Eigen::MatrixXd& values,
                               const InsightThresholds& thresholds) {
  const int m = static_cast<int>(values.rows());
  if (static_cast<int>(thresholds.differences.size()) != m ||
      static_cast<int>(thresholds.pairs.size()) != binomial(m, 2) ||
      static_cast<int>(thresholds.triplets.size()) != binomial(m, 3))
    throw InputError("InSight thresholds do not match the variable count");
  Eigen::VectorXd out(insight_length(static_cast<int>(values.cols()), m));
  Eigen::Index k = 0;
  for (const auto& s : window_statistics(values)) {
    for (double v : s.means) out[k++] = v;
    for (int i = 0; i < m; ++i) out[k++] = discretize(s.differences[i], thresholds.differences[i]);
    for (std::size_t i = 0; i < s.pairs.size(); ++i)
      out[k++] = discretize(s.pairs[i], thresholds.pairs[i]);
    for (std::size_t i = 0; i < s.triplets.size(); ++i)
      out[k++] = discretize(s.triplets[i], thresholds.triplets[i]);
  }
  return out;
}

std::vector<std::string> insight_feature_names(int n_hours,
                                               const std::vector<std::string>& v) {
  const int m = static_cast<int>(v.size());
  std::vector<std::string> names;
  names.reserve(insight_length(n_hours, m));
  for (int w = 0; w + kInsightWindow <= n_hours; ++w) {
    const std::string p = "w" + std::to_string(w) + "_";
    for (int i = 0; i < m; ++i) names.push_back(p + "mean_" + v[i]);
    for (int i = 0; i < m; ++i) names.push_back(p + "diff_" + v[i]);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) names.push_back(p + "corr_" + v[i] + "_" + v[j]);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k)
          names.push_back(p + "tcorr_" + v[i] + "_" + v[j] + "_" + v[k]);
  }
  return names;
}

Eigen::MatrixXd insight_matrix(const IrregularSeries& series, int n_features,
                               std::span<const int> feature_ids, int n_hours,
                               bool include_age) {
  const HourlyMatrix grid = hourly_impute(series, n_features, n_hours);
  const int rows = static_cast<int>(feature_ids.size()) + (include_age ? 1 : 0);
  Eigen::MatrixXd out(rows, n_hours);
  for (std::size_t i = 0; i < feature_ids.size(); ++i) {
    if (feature_ids[i] < 0 || feature_ids[i] >= n_features)
      throw InputError("InSight feature id out of range");
    out.row(static_cast<Eigen::Index>(i)) = grid.values.row(feature_ids[i]);
  }
  if (include_age) {
    if (series.static_features.size() < 1) throw InputError("no age static feature");
    out.row(rows - 1).setConstant(series.static_features[0]);
  }
  return out;
}

bool insight_eligible(const IrregularSeries& series, std::span<const int> feature_ids,
                      double lookback_hours) {
  for (int f : feature_ids) {
    const bool seen = std::any_of(series.observations.begin(), series.observations.end(),
                                  [&](const Observation& o) {
                                    return o.feature == f && o.t >= -lookback_hours;
                                  });
    if (!seen) return false;
  }
  return true;
}

Eigen::VectorXd hourly_features(const IrregularSeries& series, int n_features, int n_hours) {
  const HourlyMatrix grid = hourly_impute(series, n_features, n_hours);
  Eigen::VectorXd out(grid.values.size() + series.static_features.size());
  Eigen::Index k = 0;
  for (int c = 0; c < n_hours; ++c)
    for (int f = 0; f < n_features; ++f) out[k++] = grid.values(f, c);
  for (Eigen::Index q = 0; q < series.static_features.size(); ++q)
    out[k++] = series.static_features[q];
  return out;
}

Eigen::VectorXd LogisticModel::predict(const Eigen::MatrixXd& features) const {
  if (features.cols() != weights.size()) throw InputError("feature width mismatch");
  Eigen::VectorXd z = (features * weights).array() + intercept;
  return z.unaryExpr([](double v) {
    return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  });
}

double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> labels, double l2,
                          const Eigen::VectorXd& theta, Eigen::VectorXd* gradient) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::VectorXd w = theta.head(d);
  const double b = theta[d];
  const Eigen::VectorXd z = (x * w).array() + b;
  double loss = 0.0;
  Eigen::VectorXd residual(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z[i];
    // log(1 + exp(z)) - y z, evaluated stably.
    const double softplus = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    loss += softplus - labels[i] * zi;
    const double p = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
    residual[i] = p - labels[i];
  }
  loss = loss / static_cast<double>(n) + 0.5 * l2 * w.squaredNorm();
  if (gradient) {
    gradient->resize(d + 1);
    gradient->head(d) = x.transpose() * residual / static_cast<double>(n) + l2 * w;
    (*gradient)[d] = residual.sum() / static_cast<double>(n);
  }
  return loss;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> labels,
                           const LogisticOptions& options) {
  if (x.rows() != static_cast<Eigen::Index>(labels.size()))
    throw InputError("features and labels disagree in length");
  int pos = 0, neg = 0;
  for (int y : labels) {
    if (y == 1) ++pos;
    else if (y == 0) ++neg;
    else throw InputError("labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw ConfigError("logistic regression needs both classes");
  if (!(options.l2 >= 0.0)) throw ConfigError("l2 must be >= 0");

  const Eigen::Index d = x.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd grad;
  double f = logistic_objective(x, labels, options.l2, theta, &grad);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  LogisticModel model;
  int it = 0;
  for (; it < options.max_iterations && grad.norm() > options.tolerance; ++it) {
    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = s_hist[k].dot(q) / y_hist[k].dot(s_hist[k]);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = y_hist[k].dot(q) / y_hist[k].dot(s_hist[k]);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd direction = -q;
    if (direction.dot(grad) >= 0.0) {
      s_hist.clear();
      y_hist.clear();
      direction = -grad;
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / grad.norm()) : 1.0;
    Eigen::VectorXd next, next_grad;
    double next_f = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + step * direction;
      next_f = logistic_objective(x, labels, options.l2, next, &next_grad);
      if (next_f <= f + 1e-4 * step * direction.dot(grad)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = next - theta;
    const Eigen::VectorXd y = next_grad - grad;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    theta = next;
    grad = next_grad;
    f = next_f;
  }
  model.weights = theta.head(d);
  model.intercept = theta[d];
  model.gradient_norm = grad.norm();
  model.iterations = it;
  model.converged = model.gradient_norm <= options.tolerance;
  return model;
}

std::string features_csv(const std::vector<std::string>& names,
                         std::span<const IrregularSeries> records,
                         const Eigen::MatrixXd& features) {
  if (features.rows() != static_cast<Eigen::Index>(records.size()) ||
      features.cols() != static_cast<Eigen::Index>(names.size()))
    throw InputError("features_csv: shape mismatch");
  std::ostringstream out;
  out.precision(17);
  out << "patient_id,horizon,label";
  for (const auto& n : names) out << "," << n;
  out << "\n";
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out << records[i].patient_id << "," << records[i].horizon << "," << records[i].label;
    for (Eigen::Index j = 0; j < features.cols(); ++j) out << "," << features(i, j);
    out << "\n";
  }
  return out.str();
}

}  // namespace mgpatt
