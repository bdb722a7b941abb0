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

#include "mgpatt/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mgpatt/metrics.hpp"
#include "mgpatt/parallel.hpp"
#include "mgpatt/random.hpp"

namespace mgpatt {
namespace {

void scale_kernel_gradient(KernelGradient& g, double s) {
  for (auto& m : g.feature_cov) m *= s;
  for (double& v : g.log_lengthscale) v *= s;
  g.sigma *= s;
}

std::size_t count_parameters(const MgpParameters& mgp) {
  std::size_t n = 0;
  const_cast<MgpParameters&>(mgp).visit(
      [&](const std::string&, std::span<double> v) { n += v.size(); });
  return n;
}

std::vector<double> flatten_mgp(const MgpParameters& mgp) {
  std::vector<double> out;
  const_cast<MgpParameters&>(mgp).visit(
      [&](const std::string&, std::span<double> v) {
        out.insert(out.end(), v.begin(), v.end());
      });
  return out;
}

void unflatten_mgp(MgpParameters& mgp, std::span<const double> values) {
  std::size_t k = 0;
  mgp.visit([&](const std::string&, std::span<double> v) {
    for (double& x : v) x = values[k++];
  });
}

// Full shuffled passes over `pool` followed by a random subset, `length`
// entries in total.
std::vector<std::size_t> tile(const std::vector<std::size_t>& pool,
                              std::size_t length, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(length);
  std::vector<std::size_t> pass = pool;
  while (out.size() < length) {
    std::shuffle(pass.begin(), pass.end(), rng);
    const std::size_t take = std::min(pass.size(), length - out.size());
    out.insert(out.end(), pass.begin(), pass.begin() + take);
  }
  return out;
}

double metric_or_nan(double (*metric)(std::span<const double>, std::span<const int>),
                     std::span<const double> scores, std::span<const int> labels) {
  try {
    return metric(scores, labels);
  } catch (const UndefinedMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::vector<int> labels_of(std::span<const IrregularSeries> records) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  return labels;
}

}  // namespace

void TrainConfig::validate() const {
  if (s_count < 1) throw ConfigError("s_count must be >= 1");
  if (eval_s_count < 1) throw ConfigError("eval_s_count must be >= 1");
  if (batch_size < 2 || batch_size % 2 != 0)
    throw ConfigError("batch_size must be even and >= 2");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (max_batches_per_epoch < 0)
    throw ConfigError("max_batches_per_epoch must be >= 0");
  if (mgp_pretrain_steps < 0) throw ConfigError("mgp_pretrain_steps must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_epsilon > 0.0))
    throw ConfigError("invalid Adam settings");
  tcn.validate();
}

double l2_scale(double l2, std::size_t n_train) {
  if (n_train == 0) return 0.0;
  return 0.5 * l2 / static_cast<double>(n_train);
}

double batch_loss(const Model& model, std::span<const IrregularSeries* const> batch,
                  const LossOptions& options, Model* grad) {
  if (batch.empty()) throw InputError("empty batch");
  const std::size_t n = batch.size();
  const Eigen::MatrixXd grid_prior = grid_prior_cov(model.mgp, model.config.n_grid);

  std::vector<PatientLoss> losses(n);
  std::vector<PatientGradient> grads(grad ? n : 0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    losses[i] = patient_loss(model, *batch[i], options.s_count,
                             derive_seed(options.seed, i), options.dropout_active,
                             grid_prior, grad ? &grads[i] : nullptr);
  });

  double loss = 0.0;
  for (const auto& l : losses) loss += l.loss;
  loss /= static_cast<double>(n);
  loss += options.penalty_scale * model.penalized_squared_norm();
  if (!std::isfinite(loss)) throw NumericalError("non-finite batch loss");
  if (!grad) return loss;

  const double scale = 1.0 / (static_cast<double>(options.s_count) * n);
  KernelGradient kernel = grads[0].kernel;
  Eigen::MatrixXd grid_grad = grads[0].grid_prior;
  std::vector<double> head = grads[0].head;
  for (std::size_t i = 1; i < n; ++i) {
    kernel += grads[i].kernel;
    grid_grad += grads[i].grid_prior;
    for (std::size_t k = 0; k < head.size(); ++k) head[k] += grads[i].head[k];
  }
  scale_kernel_gradient(kernel, scale);
  grid_grad *= scale;
  for (double& v : head) v *= scale;
  grid_prior_backward(model.mgp, model.config.n_grid, grid_grad, kernel);

  *grad = model.zeros_like();
  grad->mgp = raw_gradient(model.mgp, kernel);
  std::vector<double> flat = grad->flatten();
  const std::size_t offset = count_parameters(model.mgp);
  if (offset + head.size() != flat.size())
    throw InputError("head gradient size mismatch");
  std::copy(head.begin(), head.end(), flat.begin() + offset);
  grad->unflatten(flat);
  model.add_penalty_gradient(options.penalty_scale, *grad);
  return loss;
}

std::vector<std::vector<std::size_t>> balanced_batches(
    std::span<const IrregularSeries> dataset, int batch_size, std::uint64_t seed) {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw ConfigError("batch_size must be even and >= 2");
  std::vector<std::size_t> cases, controls;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].label == 1) cases.push_back(i);
    else if (dataset[i].label == 0) controls.push_back(i);
    else throw DataError("label must be 0 or 1 for " + dataset[i].patient_id);
  }
  if (cases.empty() || controls.empty())
    throw ConfigError("balanced batching needs at least one case and one control");

  const std::size_t half = static_cast<std::size_t>(batch_size / 2);
  const std::size_t larger = std::max(cases.size(), controls.size());
  const std::size_t n_batches = std::max<std::size_t>(1, (larger + half - 1) / half);
  Rng rng(seed);
  const std::vector<std::size_t> case_seq = tile(cases, n_batches * half, rng);
  const std::vector<std::size_t> control_seq = tile(controls, n_batches * half, rng);

  std::vector<std::vector<std::size_t>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    auto& batch = batches[b];
    batch.insert(batch.end(), case_seq.begin() + b * half,
                 case_seq.begin() + (b + 1) * half);
    batch.insert(batch.end(), control_seq.begin() + b * half,
                 control_seq.begin() + (b + 1) * half);
    std::shuffle(batch.begin(), batch.end(), rng);
  }
  return batches;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw InputError("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

void Adam::restore(long t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw InputError("Adam: restored state has the wrong size");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

std::uint64_t record_seed(std::uint64_t seed, const IrregularSeries& series) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : series.patient_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h, static_cast<std::uint64_t>(series.horizon));
}

std::vector<double> predict_scores(const Model& model,
                                   std::span<const IrregularSeries> records,
                                   int s_count, std::uint64_t seed, int threads) {
  std::vector<double> scores(records.size(), 0.0);
  if (records.empty()) return scores;
  const Eigen::MatrixXd grid_prior = grid_prior_cov(model.mgp, model.config.n_grid);
  parallel_for(records.size(), threads, [&](std::size_t i) {
    scores[i] = predict_patient(model, records[i], s_count,
                                record_seed(seed, records[i]), &grid_prior)
                    .probability;
  });
  return scores;
}

TrainResult train(const TrainData& data, const TrainConfig& config,
                  const std::optional<TrainState>& resume,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (data.train.empty()) throw ConfigError("empty training split");

  TrainState state;
  if (resume) {
    state = *resume;
  } else {
    ModelConfig mc;
    mc.n_features = data.n_features;
    mc.n_static = data.n_static;
    mc.ablation = config.ablation;
    mc.tcn = config.tcn;
    mc.init_lengthscales = config.init_lengthscales;
    state.model = Model::init(mc, derive_seed(config.seed, 0));
    if (config.mgp_pretrain_steps > 0)
      state.model.mgp =
          fit_mgp_likelihood(state.model.mgp, data.train, config.mgp_pretrain_steps,
                             config.mgp_pretrain_lr, config.threads);
    state.optimizer = Adam(state.model.n_parameters(), config.learning_rate,
                           config.adam_beta1, config.adam_beta2, config.adam_epsilon);
    state.best = state.model;
  }

  LossOptions options;
  options.s_count = config.s_count;
  options.dropout_active = state.model.config.tcn.dropout > 0.0;
  options.penalty_scale = l2_scale(state.model.config.tcn.l2, data.train.size());
  options.threads = config.threads;

  const std::vector<int> val_labels = labels_of(data.validation);
  TrainResult result;
  while (state.epochs_completed < config.max_epochs &&
         state.epochs_since_best < config.patience) {
    const int epoch = state.epochs_completed;
    auto batches = balanced_batches(data.train, config.batch_size,
                                    derive_seed(config.seed, 2, epoch));
    if (config.max_batches_per_epoch > 0 &&
        batches.size() > static_cast<std::size_t>(config.max_batches_per_epoch))
      batches.resize(config.max_batches_per_epoch);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const IrregularSeries*> members;
      members.reserve(batches[b].size());
      for (std::size_t i : batches[b]) members.push_back(&data.train[i]);
      options.seed = derive_seed(config.seed, 3, epoch, b);
      Model grad;
      double loss = 0.0;
      try {
        loss = batch_loss(state.model, members, options, &grad);
      } catch (const NumericalError& e) {
        throw DivergenceError(std::string("training diverged: ") + e.what(),
                              state.model);
      }
      loss_sum += loss;
      std::vector<double> params = state.model.flatten();
      state.optimizer.step(params, grad.flatten());
      state.model.unflatten(params);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches.size());
    record.val_auroc = std::numeric_limits<double>::quiet_NaN();
    record.val_aupr = std::numeric_limits<double>::quiet_NaN();
    if (!data.validation.empty()) {
      const std::vector<double> scores =
          predict_scores(state.model, data.validation, config.eval_s_count,
                         derive_seed(config.seed, 4), config.threads);
      record.val_auroc = metric_or_nan(&auroc, scores, val_labels);
      record.val_aupr = metric_or_nan(&aupr, scores, val_labels);
    }
    ++state.epochs_completed;
    if (std::isnan(record.val_auroc)) {
      state.best = state.model;  // no validation signal: keep the latest
      state.epochs_since_best = 0;
    } else if (record.val_auroc > state.best_val_auroc) {
      state.best_val_auroc = record.val_auroc;
      state.best = state.model;
      state.epochs_since_best = 0;
    } else {
      ++state.epochs_since_best;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  result.best = state.best;
  result.last = std::move(state);
  return result;
}

MgpParameters fit_mgp_likelihood(const MgpParameters& init,
                                 std::span<const IrregularSeries> records,
                                 int steps, double learning_rate, int threads,
                                 std::vector<double>* trace) {
  if (records.empty()) throw ConfigError("no records for likelihood fit");
  MgpParameters params = init;
  std::vector<double> flat = flatten_mgp(params);
  Adam adam(flat.size(), learning_rate, 0.9, 0.999, 1e-8);
  const int n_clusters = static_cast<int>(params.clusters.size());
  const int m = params.n_features();
  for (int step = 0; step < steps; ++step) {
    std::vector<double> values(records.size(), 0.0);
    std::vector<KernelGradient> grads(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
      grads[i] = KernelGradient(n_clusters, m);
      values[i] = records[i].observations.empty()
                      ? 0.0
                      : log_marginal_likelihood(records[i], params, &grads[i]);
    });
    KernelGradient total(n_clusters, m);
    double nll = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      total += grads[i];
      nll -= values[i];
    }
    const double inv = 1.0 / static_cast<double>(records.size());
    nll *= inv;
    if (!std::isfinite(nll)) throw NumericalError("non-finite marginal likelihood");
    if (trace) trace->push_back(nll);
    scale_kernel_gradient(total, -inv);
    const std::vector<double> g = flatten_mgp(raw_gradient(params, total));
    adam.step(flat, g);
    unflatten_mgp(params, flat);
  }
  return params;
}

void SearchSpace::validate() const {
  auto check = [](auto lo, auto hi, const char* name) {
    if (!(lo <= hi)) throw ConfigError(std::string("search range min > max: ") + name);
  };
  check(s_count.min, s_count.max, "s_count");
  check(kernel_size.min, kernel_size.max, "kernel_size");
  check(n_blocks.min, n_blocks.max, "n_blocks");
  check(hidden_channels.min, hidden_channels.max, "hidden_channels");
  check(dropout.min, dropout.max, "dropout");
  check(l2.min, l2.max, "l2");
}

std::vector<TrialConfig> sample_trials(const SearchSpace& space, int n_trials,
                                       std::uint64_t seed) {
  space.validate();
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  Rng rng(derive_seed(seed, 5));
  auto real = [&](RealRange r) { return uniform(rng, r.min, r.max); };
  auto integer = [&](IntRange r) {
    const long v = std::lround(uniform(rng, r.min, r.max));
    return static_cast<int>(std::clamp<long>(v, r.min, r.max));
  };
  std::vector<TrialConfig> trials(n_trials);
  for (auto& t : trials) {
    t.s_count = integer(space.s_count);
    t.tcn.kernel_size = integer(space.kernel_size);
    t.tcn.n_blocks = integer(space.n_blocks);
    t.tcn.hidden_channels = integer(space.hidden_channels);
    t.tcn.dropout = real(space.dropout);
    t.tcn.l2 = real(space.l2);
  }
  return trials;
}

std::vector<TrialResult> random_search(const SearchSpace& space, int n_trials,
                                       std::uint64_t seed, const TrainData& data,
                                       const TrainConfig& base) {
  const std::vector<TrialConfig> trials = sample_trials(space, n_trials, seed);
  std::vector<TrialResult> results;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    TrainConfig config = base;
    config.s_count = trials[i].s_count;
    config.tcn = trials[i].tcn;
    config.seed = derive_seed(seed, 6, i);
    const TrainResult run = train(data, config);
    TrialResult r;
    r.config = trials[i];
    r.epochs = static_cast<int>(run.history.size());
    r.val_auroc = std::numeric_limits<double>::quiet_NaN();
    r.val_aupr = std::numeric_limits<double>::quiet_NaN();
    for (const auto& h : run.history) {
      if (!std::isnan(h.val_auroc) &&
          (std::isnan(r.val_auroc) || h.val_auroc > r.val_auroc)) {
        r.val_auroc = h.val_auroc;
        r.val_aupr = h.val_aupr;
      }
    }
    results.push_back(r);
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const TrialResult& a, const TrialResult& b) {
                     if (std::isnan(a.val_auroc)) return false;
                     if (std::isnan(b.val_auroc)) return true;
                     return a.val_auroc > b.val_auroc;
                   });
  return results;
}

}  // namespace mgpatt
