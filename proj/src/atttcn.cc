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

#include "mgpatt/atttcn.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "mgpatt/errors.hpp"

namespace mgpatt {

void TcnConfig::validate() const {
  if (kernel_size < 1) throw ConfigError("TCN kernel size must be >= 1");
  if (n_blocks < 1) throw ConfigError("TCN needs at least one block");
  if (hidden_channels < 1) throw ConfigError("TCN hidden width must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("TCN dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ConfigError("TCN L2 must be non-negative");
}

ConvLayer ConvLayer::glorot(int in, int out, int kernel_size, Rng& rng) {
  ConvLayer layer;
  const double limit = std::sqrt(6.0 / (in * kernel_size + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  layer.taps.resize(kernel_size);
  for (auto& w : layer.taps) {
    w.resize(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
  }
  layer.bias = Eigen::VectorXd::Zero(out);
  return layer;
}

ConvLayer ConvLayer::zeros_like() const {
  ConvLayer z;
  for (const auto& w : taps) z.taps.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  z.bias = Eigen::VectorXd::Zero(bias.size());
  return z;
}

Eigen::MatrixXd causal_conv(const ConvLayer& layer, const Eigen::MatrixXd& x) {
  if (x.cols() != layer.in_channels())
    throw ConfigError("convolution input has " + std::to_string(x.cols()) +
                      " channels, expected " +
                      std::to_string(layer.in_channels()));
  const Eigen::Index n = x.rows();
  const int k = layer.kernel_size();
  Eigen::MatrixXd y = layer.bias.transpose().replicate(n, 1);
  for (int r = 0; r < k; ++r) {
    const Eigen::Index shift = k - 1 - r;
    if (shift >= n) continue;
    y.bottomRows(n - shift).noalias() +=
        x.topRows(n - shift) * layer.taps[r].transpose();
  }
  return y;
}

namespace {

Eigen::MatrixXd conv_relu_dropout(const ConvLayer& layer,
                                  const Eigen::MatrixXd& x, double dropout,
                                  Rng* rng, TcnCache* cache) {
  Eigen::MatrixXd pre = causal_conv(layer, x);
  Eigen::MatrixXd out = pre.cwiseMax(0.0);
  Eigen::MatrixXd scale;
  if (rng && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    scale.resize(out.rows(), out.cols());
    const double s = 1.0 / (1.0 - dropout);
    for (Eigen::Index c = 0; c < scale.cols(); ++c)
      for (Eigen::Index r = 0; r < scale.rows(); ++r)
        scale(r, c) = keep(*rng) ? s : 0.0;
    out.array() *= scale.array();
  }
  if (cache) cache->layers.push_back({x, std::move(pre), std::move(scale)});
  return out;
}

Eigen::MatrixXd conv_backward(const ConvLayer& layer, const ConvCache& cache,
                              const Eigen::MatrixXd& out_grad,
                              ConvLayer& grad) {
  Eigen::MatrixXd d = out_grad;
  if (cache.dropout_scale.size() > 0) d.array() *= cache.dropout_scale.array();
  d.array() *= (cache.pre_activation.array() > 0.0).cast<double>();
  grad.bias += d.colwise().sum().transpose();
  const Eigen::Index n = d.rows();
  const int k = layer.kernel_size();
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, layer.in_channels());
  for (int r = 0; r < k; ++r) {
    const Eigen::Index shift = k - 1 - r;
    if (shift >= n) continue;
    grad.taps[r].noalias() +=
        d.bottomRows(n - shift).transpose() * cache.input.topRows(n - shift);
    dx.topRows(n - shift).noalias() += d.bottomRows(n - shift) * layer.taps[r];
  }
  return dx;
}

}  // namespace

TcnStack TcnStack::init(const TcnConfig& config, int in_channels,
                        int out_channels, Rng& rng) {
  config.validate();
  TcnStack stack;
  int width = in_channels;
  for (int b = 0; b < config.n_blocks; ++b) {
    const bool last = b + 1 == config.n_blocks;
    ResidualBlock block;
    block.first = ConvLayer::glorot(width, config.hidden_channels,
                                    config.kernel_size, rng);
    const int out = last ? out_channels : config.hidden_channels;
    block.second = ConvLayer::glorot(config.hidden_channels, out,
                                     config.kernel_size, rng);
    width = out;
    stack.blocks.push_back(std::move(block));
  }
  return stack;
}

TcnStack TcnStack::zeros_like() const {
  TcnStack z;
  for (const auto& b : blocks)
    z.blocks.push_back({b.first.zeros_like(), b.second.zeros_like()});
  return z;
}

double TcnStack::squared_weight_norm() const {
  double total = 0.0;
  for (const auto& b : blocks) {
    for (const auto& w : b.first.taps) total += w.squaredNorm();
    for (const auto& w : b.second.taps) total += w.squaredNorm();
  }
  return total;
}

Eigen::MatrixXd causal_residual_block(const Eigen::MatrixXd& input,
                                      const ResidualBlock& block,
                                      double dropout, Rng* rng,
                                      TcnCache* cache) {
  const Eigen::MatrixXd h = conv_relu_dropout(block.first, input, dropout, rng, cache);
  return conv_relu_dropout(block.second, h, dropout, rng, cache);
}

Eigen::MatrixXd tcn_forward(const TcnStack& stack, const Eigen::MatrixXd& input,
                            double dropout, Rng* rng, TcnCache* cache) {
  if (cache) cache->layers.clear();
  Eigen::MatrixXd h = input;
  for (const ResidualBlock& block : stack.blocks)
    h = causal_residual_block(h, block, dropout, rng, cache);
  return h;
}

Eigen::MatrixXd tcn_backward(const TcnStack& stack, const TcnCache& cache,
                             const Eigen::MatrixXd& output_grad,
                             TcnStack& grad) {
  if (cache.layers.size() != 2 * stack.blocks.size())
    throw InputError("TCN cache does not match the stack");
  Eigen::MatrixXd d = output_grad;
  for (std::size_t b = stack.blocks.size(); b-- > 0;) {
    d = conv_backward(stack.blocks[b].second, cache.layers[2 * b + 1], d,
                      grad.blocks[b].second);
    d = conv_backward(stack.blocks[b].first, cache.layers[2 * b], d,
                      grad.blocks[b].first);
  }
  return d;
}

AttTcnParameters AttTcnParameters::init(int channels, const TcnConfig& config,
                                        Rng& rng) {
  AttTcnParameters p;
  p.tcn_alpha = TcnStack::init(config, channels, channels, rng);
  p.tcn_beta = TcnStack::init(config, channels, channels, rng);
  std::normal_distribution<double> normal(0.0, 0.1);
  p.w_alpha.resize(channels, 2);
  for (Eigen::Index i = 0; i < p.w_alpha.size(); ++i) p.w_alpha.data()[i] = normal(rng);
  p.b_alpha = Eigen::VectorXd::Zero(2);
  for (int d = 0; d < 2; ++d) {
    p.w_beta[d].resize(channels, channels);
    for (Eigen::Index i = 0; i < p.w_beta[d].size(); ++i)
      p.w_beta[d].data()[i] = normal(rng);
    p.b_beta[d] = Eigen::VectorXd::Zero(channels);
  }
  return p;
}

AttTcnParameters AttTcnParameters::zeros_like() const {
  AttTcnParameters z;
  z.tcn_alpha = tcn_alpha.zeros_like();
  z.tcn_beta = tcn_beta.zeros_like();
  z.w_alpha = Eigen::MatrixXd::Zero(w_alpha.rows(), w_alpha.cols());
  z.b_alpha = Eigen::VectorXd::Zero(b_alpha.size());
  for (int d = 0; d < 2; ++d) {
    z.w_beta[d] = Eigen::MatrixXd::Zero(w_beta[d].rows(), w_beta[d].cols());
    z.b_beta[d] = Eigen::VectorXd::Zero(b_beta[d].size());
  }
  return z;
}

Embedding embed(const Eigen::MatrixXd& y_mc, const AttTcnParameters& params,
                double dropout, Rng* rng) {
  if (!y_mc.allFinite()) throw InputError("non-finite classifier input");
  Embedding e;
  e.z = tcn_forward(params.tcn_alpha, y_mc, dropout, rng, &e.alpha_cache);
  e.z_prime = tcn_forward(params.tcn_beta, y_mc, dropout, rng, &e.beta_cache);
  return e;
}

namespace {

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& s) {
  const double m = s.maxCoeff();
  Eigen::Vector2d e = (s.array() - m).exp();
  return e / e.sum();
}

}  // namespace

AttentionWeights attention(const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& z_prime,
                           const AttTcnParameters& params,
                           const std::vector<bool>& padded,
                           AttentionArms arms) {
  const Eigen::Index n = z.rows();
  if (static_cast<Eigen::Index>(padded.size()) != n)
    throw InputError("mask length differs from the number of rows");
  Eigen::Index n_valid = 0;
  for (bool p : padded) n_valid += p ? 0 : 1;
  if (n_valid == 0) throw InputError("attention over an all-padded series");

  AttentionWeights w;
  w.logits = z * params.w_alpha;
  w.logits.rowwise() += params.b_alpha.transpose();
  w.alpha = Eigen::MatrixXd::Zero(n, 2);
  w.uniform_alpha = !arms.alpha;
  for (int d = 0; d < 2; ++d) {
    if (!arms.alpha) {
      for (Eigen::Index j = 0; j < n; ++j)
        if (!padded[j]) w.alpha(j, d) = 1.0 / static_cast<double>(n_valid);
      continue;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (!padded[j]) m = std::max(m, w.logits(j, d));
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (padded[j]) continue;
      w.alpha(j, d) = std::exp(w.logits(j, d) - m);
      total += w.alpha(j, d);
    }
    w.alpha.col(d) /= total;
  }
  for (int d = 0; d < 2; ++d) {
    if (!arms.beta) {
      w.beta[d] = Eigen::MatrixXd::Ones(n, z_prime.cols());
      continue;
    }
    Eigen::MatrixXd pre = z_prime * params.w_beta[d];
    pre.rowwise() += params.b_beta[d].transpose();
    w.beta[d] = pre.unaryExpr([](double x) { return sigmoid(x); });
  }
  return w;
}

namespace {

std::atomic<bool> g_monitor_on{false};
std::atomic<long> g_checks{0};
std::atomic<long> g_violations{0};
std::mutex g_violation_mutex;
std::string g_last_violation;

}  // namespace

void ForwardInvariantMonitor::enable(bool on) { g_monitor_on = on; }
bool ForwardInvariantMonitor::enabled() { return g_monitor_on; }
long ForwardInvariantMonitor::checks() { return g_checks; }
long ForwardInvariantMonitor::violations() { return g_violations; }
std::string ForwardInvariantMonitor::last_violation() {
  std::lock_guard<std::mutex> lock(g_violation_mutex);
  return g_last_violation;
}
void ForwardInvariantMonitor::reset() {
  g_checks = 0;
  g_violations = 0;
  std::lock_guard<std::mutex> lock(g_violation_mutex);
  g_last_violation.clear();
}

Eigen::Vector2d probabilities_from_contributions(
    const std::array<Eigen::MatrixXd, 2>& contributions) {
  return softmax2({contributions[0].sum(), contributions[1].sum()});
}

AttentionTrace predict(const Eigen::MatrixXd& y_mc,
                       const AttentionWeights& weights,
                       const std::vector<bool>& padded) {
  const Eigen::Index n = y_mc.rows();
  AttentionTrace trace;
  trace.alpha = weights.alpha;
  trace.beta = weights.beta;
  std::array<Eigen::VectorXd, 2> row_value;
  for (int d = 0; d < 2; ++d) {
    const Eigen::MatrixXd gated = weights.beta[d].cwiseProduct(y_mc);
    trace.contributions[d] = weights.alpha.col(d).asDiagonal() * gated;
    row_value[d] = gated.rowwise().sum();
    trace.scores[d] = trace.contributions[d].sum();
  }
  trace.probabilities = softmax2(trace.scores);

  // Prefix predictions: alpha renormalized over unpadded rows j <= i. Each
  // row reads only inputs at rows <= i.
  const bool uniform = weights.uniform_alpha;
  trace.step_probabilities = Eigen::MatrixXd::Constant(n, 2, 0.5);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    bool any = false;
    for (int d = 0; d < 2; ++d) {
      double m = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j <= i; ++j)
        if (!padded[j]) m = std::max(m, weights.logits(j, d));
      if (!std::isfinite(m)) continue;
      any = true;
      double total = 0.0, acc = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        if (padded[j]) continue;
        const double e = uniform ? 1.0 : std::exp(weights.logits(j, d) - m);
        total += e;
        acc += e * row_value[d][j];
      }
      score[d] = acc / total;
    }
    if (any) trace.step_probabilities.row(i) = softmax2(score).transpose();
  }
  trace.step_probabilities.row(n - 1) = trace.probabilities.transpose();

  if (ForwardInvariantMonitor::enabled()) {
    ++g_checks;
    std::string err = check_trace_invariants(trace, padded);
    const Eigen::Vector2d re = probabilities_from_contributions(trace.contributions);
    if (err.empty() && (re - trace.probabilities).cwiseAbs().maxCoeff() > 1e-10)
      err = "contributions do not reproduce the probabilities";
    if (!err.empty()) {
      ++g_violations;
      std::lock_guard<std::mutex> lock(g_violation_mutex);
      g_last_violation = err;
    }
  }
  return trace;
}

std::string check_trace_invariants(const AttentionTrace& trace,
                                   const std::vector<bool>& padded,
                                   double tol) {
  std::ostringstream err;
  for (int d = 0; d < 2; ++d) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < trace.alpha.rows(); ++j) {
      const double a = trace.alpha(j, d);
      if (!(a >= 0.0 && a <= 1.0)) {
        err << "alpha out of [0,1] at row " << j;
        return err.str();
      }
      if (!padded[j]) total += a;
    }
    if (std::abs(total - 1.0) > tol) {
      err << "alpha column " << d << " sums to " << total;
      return err.str();
    }
    if (!(trace.beta[d].array() >= 0.0).all() ||
        !(trace.beta[d].array() <= 1.0).all())
      return "beta out of [0,1]";
  }
  if (std::abs(trace.probabilities.sum() - 1.0) > tol)
    return "probabilities do not sum to 1";
  return {};
}

Eigen::MatrixXd attention_backward(const Eigen::MatrixXd& y_mc,
                                   const Embedding& embedding,
                                   const AttentionWeights& weights,
                                   const AttentionTrace& trace,
                                   const std::vector<bool>& padded, int label,
                                   const AttTcnParameters& params,
                                   AttentionArms arms, AttTcnParameters& grad) {
  (void)padded;
  const Eigen::Index n = y_mc.rows();
  const Eigen::Index c = y_mc.cols();
  Eigen::Vector2d score_grad = trace.probabilities;
  score_grad[label] -= 1.0;

  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(n, c);
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(n, c);
  Eigen::MatrixXd dz_prime = Eigen::MatrixXd::Zero(n, c);
  for (int d = 0; d < 2; ++d) {
    const Eigen::VectorXd alpha = weights.alpha.col(d);
    const Eigen::MatrixXd& beta = weights.beta[d];
    const Eigen::VectorXd value = beta.cwiseProduct(y_mc).rowwise().sum();
    const Eigen::VectorXd alpha_grad = score_grad[d] * value;
    const Eigen::VectorXd value_grad = score_grad[d] * alpha;
    dy += value_grad.asDiagonal() * beta;
    if (arms.alpha) {
      const double inner = alpha.dot(alpha_grad);
      const Eigen::VectorXd logit_grad =
          alpha.cwiseProduct((alpha_grad.array() - inner).matrix());
      dz.noalias() += logit_grad * params.w_alpha.col(d).transpose();
      grad.w_alpha.col(d).noalias() += embedding.z.transpose() * logit_grad;
      grad.b_alpha[d] += logit_grad.sum();
    }
    if (arms.beta) {
      const Eigen::MatrixXd beta_grad = value_grad.asDiagonal() * y_mc;
      const Eigen::MatrixXd pre_grad =
          beta_grad.cwiseProduct(beta.cwiseProduct((1.0 - beta.array()).matrix()));
      dz_prime.noalias() += pre_grad * params.w_beta[d].transpose();
      grad.w_beta[d].noalias() += embedding.z_prime.transpose() * pre_grad;
      grad.b_beta[d] += pre_grad.colwise().sum().transpose();
    }
  }
  if (arms.alpha)
    dy += tcn_backward(params.tcn_alpha, embedding.alpha_cache, dz, grad.tcn_alpha);
  if (arms.beta)
    dy += tcn_backward(params.tcn_beta, embedding.beta_cache, dz_prime,
                       grad.tcn_beta);
  return dy;
}

}  // namespace mgpatt
