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

#include "mgpatt/model.hpp"

#include <algorithm>
#include <cmath>

#include "mgpatt/errors.hpp"
#include "mgpatt/random.hpp"

namespace mgpatt {

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: return "full";
    case Ablation::kNoAlpha: return "no_alpha";
    case Ablation::kNoBeta: return "no_beta";
    case Ablation::kSeKernel: return "se_kernel";
    case Ablation::kMgpLogregHead: return "mgp_logreg_head";
    case Ablation::kMgpTcnHead: return "mgp_tcn_head";
  }
  return "full";
}

Ablation ablation_from_string(std::string_view name) {
  for (Ablation a : {Ablation::kFull, Ablation::kNoAlpha, Ablation::kNoBeta,
                     Ablation::kSeKernel, Ablation::kMgpLogregHead,
                     Ablation::kMgpTcnHead})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (n_features < 1) throw ConfigError("model needs at least one dynamic feature");
  if (n_static < 0) throw ConfigError("negative static feature count");
  if (n_grid < 1) throw ConfigError("grid size must be positive");
  if (init_lengthscales.empty())
    throw ConfigError("at least one smoothness cluster is required");
  for (double l : init_lengthscales)
    if (!(l > 0.0)) throw ConfigError("initial lengthscales must be positive");
  if (!(init_factor > 0.0) || !(init_noise > 0.0))
    throw ConfigError("initial factor and noise scales must be positive");
  tcn.validate();
}

namespace {

AttentionArms arms_for(Ablation a) {
  return {a != Ablation::kNoAlpha, a != Ablation::kNoBeta};
}

HeadParameters head_zeros_like(const HeadParameters& head) {
  return std::visit(
      [](const auto& h) -> HeadParameters {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, AttTcnParameters>) {
          return h.zeros_like();
        } else if constexpr (std::is_same_v<T, TcnLinearHead>) {
          return TcnLinearHead{h.tcn.zeros_like(),
                               Eigen::MatrixXd::Zero(h.weights.rows(), h.weights.cols()),
                               Eigen::VectorXd::Zero(h.bias.size())};
        } else {
          return LinearHead{Eigen::MatrixXd::Zero(h.weights.rows(), h.weights.cols()),
                            Eigen::VectorXd::Zero(h.bias.size())};
        }
      },
      head);
}

void append_head(HeadParameters& head, std::vector<double>& out) {
  std::visit(
      [&](auto& h) {
        h.visit([&](const std::string&, std::span<double> v) {
          out.insert(out.end(), v.begin(), v.end());
        });
      },
      head);
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& s) {
  const double m = s.maxCoeff();
  Eigen::Vector2d e = (s.array() - m).exp();
  return e / e.sum();
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void add_tap_penalty(const TcnStack& stack, double scale, TcnStack& grad) {
  for (std::size_t b = 0; b < stack.blocks.size(); ++b) {
    for (std::size_t r = 0; r < stack.blocks[b].first.taps.size(); ++r)
      grad.blocks[b].first.taps[r] += 2.0 * scale * stack.blocks[b].first.taps[r];
    for (std::size_t r = 0; r < stack.blocks[b].second.taps.size(); ++r)
      grad.blocks[b].second.taps[r] += 2.0 * scale * stack.blocks[b].second.taps[r];
  }
}

}  // namespace

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  Model model;
  model.config = config;
  const TimeKernelFamily family = config.ablation == Ablation::kSeKernel
                                      ? TimeKernelFamily::kSquaredExponential
                                      : TimeKernelFamily::kOrnsteinUhlenbeck;
  model.mgp = MgpParameters::make(config.n_features, config.init_lengthscales,
                                  family, config.init_factor, config.init_noise);
  const int c = config.channels();
  switch (config.ablation) {
    case Ablation::kMgpLogregHead: {
      std::normal_distribution<double> normal(0.0, 0.01);
      LinearHead h;
      h.weights.resize(config.n_grid, c);
      for (Eigen::Index i = 0; i < h.weights.size(); ++i) h.weights.data()[i] = normal(rng);
      h.bias = Eigen::VectorXd::Zero(1);
      model.head = std::move(h);
      break;
    }
    case Ablation::kMgpTcnHead: {
      TcnLinearHead h;
      h.tcn = TcnStack::init(config.tcn, c, c, rng);
      std::normal_distribution<double> normal(0.0, 0.1);
      h.weights.resize(2, c);
      for (Eigen::Index i = 0; i < h.weights.size(); ++i) h.weights.data()[i] = normal(rng);
      h.bias = Eigen::VectorXd::Zero(2);
      model.head = std::move(h);
      break;
    }
    default:
      model.head = AttTcnParameters::init(c, config.tcn, rng);
  }
  return model;
}

Model Model::zeros_like() const {
  Model z;
  z.config = config;
  z.mgp = mgp.zeros_like();
  z.head = head_zeros_like(head);
  return z;
}

std::size_t Model::n_parameters() const {
  std::size_t n = 0;
  visit([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

std::vector<double> Model::flatten() const {
  std::vector<double> out;
  out.reserve(n_parameters());
  visit([&](const std::string&, std::span<const double> v) {
    out.insert(out.end(), v.begin(), v.end());
  });
  return out;
}

void Model::unflatten(std::span<const double> values) {
  if (values.size() != n_parameters())
    throw InputError("parameter vector has the wrong length");
  std::size_t pos = 0;
  visit([&](const std::string&, std::span<double> v) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), v.size(), v.begin());
    pos += v.size();
  });
}

double Model::penalized_squared_norm() const {
  return std::visit(
      [](const auto& h) -> double {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, AttTcnParameters>) {
          return h.tcn_alpha.squared_weight_norm() + h.tcn_beta.squared_weight_norm();
        } else if constexpr (std::is_same_v<T, TcnLinearHead>) {
          return h.tcn.squared_weight_norm();
        } else {
          return h.weights.squaredNorm();
        }
      },
      head);
}

void Model::add_penalty_gradient(double scale, Model& grad) const {
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        auto& g = std::get<T>(grad.head);
        if constexpr (std::is_same_v<T, AttTcnParameters>) {
          add_tap_penalty(h.tcn_alpha, scale, g.tcn_alpha);
          add_tap_penalty(h.tcn_beta, scale, g.tcn_beta);
        } else if constexpr (std::is_same_v<T, TcnLinearHead>) {
          add_tap_penalty(h.tcn, scale, g.tcn);
        } else {
          g.weights += 2.0 * scale * h.weights;
        }
      },
      head);
}

HeadEvaluation evaluate_head(const Model& model, const Eigen::MatrixXd& y_mc,
                             const std::vector<bool>& padded, int label,
                             Rng* dropout_rng, HeadParameters* head_grad) {
  const double dropout = model.config.tcn.dropout;
  HeadEvaluation out;
  const Eigen::Index n = y_mc.rows();
  if (const auto* att = std::get_if<AttTcnParameters>(&model.head)) {
    const AttentionArms arms = arms_for(model.config.ablation);
    const Embedding emb = embed(y_mc, *att, dropout, dropout_rng);
    const AttentionWeights w = attention(emb.z, emb.z_prime, *att, padded, arms);
    AttentionTrace trace = predict(y_mc, w, padded);
    out.probabilities = trace.probabilities;
    out.step_probabilities = trace.step_probabilities;
    if (head_grad)
      out.input_grad = attention_backward(y_mc, emb, w, trace, padded, label, *att,
                                          arms, std::get<AttTcnParameters>(*head_grad));
    out.trace = std::move(trace);
  } else if (const auto* tcn = std::get_if<TcnLinearHead>(&model.head)) {
    TcnCache cache;
    const Eigen::MatrixXd z = tcn_forward(tcn->tcn, y_mc, dropout, dropout_rng, &cache);
    out.step_probabilities.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector2d logits = tcn->weights * z.row(i).transpose() + tcn->bias;
      out.step_probabilities.row(i) = softmax2(logits).transpose();
    }
    out.probabilities = out.step_probabilities.row(n - 1).transpose();
    if (head_grad) {
      auto& g = std::get<TcnLinearHead>(*head_grad);
      Eigen::Vector2d dlogit = out.probabilities;
      dlogit[label] -= 1.0;
      g.weights += dlogit * z.row(n - 1);
      g.bias += dlogit;
      Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());
      dz.row(n - 1) = (tcn->weights.transpose() * dlogit).transpose();
      out.input_grad = tcn_backward(tcn->tcn, cache, dz, g.tcn);
    }
  } else {
    const auto& lin = std::get<LinearHead>(model.head);
    if (lin.weights.rows() != n || lin.weights.cols() != y_mc.cols())
      throw ConfigError("logistic head shape does not match the input");
    out.step_probabilities.resize(n, 2);
    double logit = lin.bias[0];
    for (Eigen::Index i = 0; i < n; ++i) {
      logit += lin.weights.row(i).dot(y_mc.row(i));
      const double p1 = sigmoid(logit);
      out.step_probabilities(i, 0) = 1.0 - p1;
      out.step_probabilities(i, 1) = p1;
    }
    out.probabilities = out.step_probabilities.row(n - 1).transpose();
    if (head_grad) {
      auto& g = std::get<LinearHead>(*head_grad);
      const double dlogit = out.probabilities[1] - label;
      g.weights += dlogit * y_mc;
      g.bias[0] += dlogit;
      out.input_grad = dlogit * lin.weights;
    }
  }
  return out;
}

PatientPrediction predict_patient(const Model& model,
                                  const IrregularSeries& series, int s_count,
                                  std::uint64_t seed,
                                  const Eigen::MatrixXd* grid_prior) {
  PatientPrediction pred;
  pred.posterior = posterior(series, model.mgp, model.config.n_grid, nullptr, grid_prior);
  pred.samples = sample(pred.posterior, series.static_features, s_count,
                        derive_seed(seed, 0));
  pred.probability = 0.0;
  pred.step_probabilities = Eigen::MatrixXd::Zero(model.config.n_grid, 2);
  for (int s = 0; s < s_count; ++s) {
    HeadEvaluation ev = evaluate_head(model, pred.samples.samples[s],
                                      pred.samples.padded, 0, nullptr, nullptr);
    pred.sample_probabilities.push_back(ev.probabilities[1]);
    pred.probability += ev.probabilities[1] / s_count;
    pred.step_probabilities += ev.step_probabilities / s_count;
    if (ev.trace) pred.traces.push_back(std::move(*ev.trace));
  }
  return pred;
}

PatientLoss patient_loss(const Model& model, const IrregularSeries& series,
                         int s_count, std::uint64_t seed, bool dropout_active,
                         const Eigen::MatrixXd& grid_prior,
                         PatientGradient* grad) {
  if (series.label != 0 && series.label != 1)
    throw DataError("label must be 0 or 1 for " + series.patient_id);
  PosteriorWork work;
  const PosteriorGaussian post =
      posterior(series, model.mgp, model.config.n_grid, &work, &grid_prior);
  const GridSampleBatch batch =
      sample(post, series.static_features, s_count, derive_seed(seed, 0));

  PatientLoss out;
  out.probability = 0.0;
  HeadParameters head_grad;
  if (grad) head_grad = head_zeros_like(model.head);
  std::vector<Eigen::MatrixXd> sample_grads;
  for (int s = 0; s < s_count; ++s) {
    Rng rng(derive_seed(seed, 1, s));
    const HeadEvaluation ev =
        evaluate_head(model, batch.samples[s], batch.padded, series.label,
                      dropout_active ? &rng : nullptr, grad ? &head_grad : nullptr);
    const double p = std::max(ev.probabilities[series.label], 1e-300);
    out.loss += -std::log(p) / s_count;
    out.probability += ev.probabilities[1] / s_count;
    if (grad) sample_grads.push_back(ev.input_grad);
  }
  if (!std::isfinite(out.loss))
    throw NumericalError("non-finite loss for patient " + series.patient_id);
  if (!grad) return out;

  grad->head.clear();
  append_head(head_grad, grad->head);
  grad->kernel = KernelGradient(static_cast<int>(model.mgp.clusters.size()),
                                model.mgp.n_features());
  grad->grid_prior = Eigen::MatrixXd::Zero(grid_prior.rows(), grid_prior.cols());
  Eigen::VectorXd mean_grad;
  Eigen::MatrixXd cov_grad;
  sample_backward(batch, sample_grads, mean_grad, cov_grad);
  posterior_backward(work, post, model.mgp, mean_grad, cov_grad, grad->kernel,
                     &grad->grid_prior);
  return out;
}

}  // namespace mgpatt
