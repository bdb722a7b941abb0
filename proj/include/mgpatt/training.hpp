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

#ifndef MGPATT_TRAINING_HPP_
#define MGPATT_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgpatt/errors.hpp"
#include "mgpatt/model.hpp"
#include "mgpatt/series.hpp"

namespace mgpatt {

struct TrainConfig {
  int s_count = 10;
  int batch_size = 32;
  int max_epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  TcnConfig tcn;
  int patience = 10;           // epochs without validation AUROC improvement
  int max_batches_per_epoch = 0;  // 0: full balanced epoch
  int eval_s_count = 10;
  int threads = 1;
  int mgp_pretrain_steps = 0;  // marginal-likelihood steps before training
  double mgp_pretrain_lr = 0.05;
  std::vector<double> init_lengthscales = {3.0, 30.0};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

// Per-example weight decay: penalty = 0.5 * l2 * |w|^2 / n_train.
double l2_scale(double l2, std::size_t n_train);

struct LossOptions {
  int s_count = 10;
  std::uint64_t seed = 0;
  bool dropout_active = false;
  double penalty_scale = 0.0;  // multiplies Model::penalized_squared_norm
  int threads = 1;
};

// Mean over patients of the mean cross-entropy over Monte Carlo samples,
// plus the L2 penalty. Fills `grad` (shaped like `model`) when non-null.
// Per-patient results are reduced in batch order.
double batch_loss(const Model& model, std::span<const IrregularSeries* const> batch,
                  const LossOptions& options, Model* grad = nullptr);

// Index batches over `dataset` for one epoch: the larger class is shuffled,
// the smaller one is oversampled (whole shuffled passes plus a random
// remainder) to the same length, and each batch takes batch_size/2 of each,
// shuffled together. Throws ConfigError if a class is empty or batch_size
// is odd or < 2.
std::vector<std::vector<std::size_t>> balanced_batches(
    std::span<const IrregularSeries> dataset, int batch_size, std::uint64_t seed);

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1, double beta2, double epsilon);
  void step(std::vector<double>& params, const std::vector<double>& grad);

  long steps() const { return t_; }
  double learning_rate() const { return lr_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return epsilon_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(long t, std::vector<double> m, std::vector<double> v);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, epsilon_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Deterministic per-record seed from (seed, patient id, horizon).
std::uint64_t record_seed(std::uint64_t seed, const IrregularSeries& series);

// Mean P(label = 1) per record, evaluation mode.
std::vector<double> predict_scores(const Model& model,
                                   std::span<const IrregularSeries> records,
                                   int s_count, std::uint64_t seed, int threads);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auroc = 0.0;  // NaN when undefined
  double val_aupr = 0.0;
};

struct TrainState {
  Model model;
  Model best;
  Adam optimizer;
  int epochs_completed = 0;
  double best_val_auroc = -1.0;
  int epochs_since_best = 0;
};

// Raised when the loss or a posterior becomes non-finite during training;
// carries the parameters at the start of the failing step.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, Model snapshot)
      : NumericalError(what), snapshot_(std::move(snapshot)) {}
  const Model& snapshot() const { return snapshot_; }

 private:
  Model snapshot_;
};

struct TrainResult {
  Model best;           // best validation AUROC checkpoint
  TrainState last;      // for resuming
  std::vector<EpochRecord> history;
};

struct TrainData {
  std::span<const IrregularSeries> train;
  std::span<const IrregularSeries> validation;
  int n_features = 0;
  int n_static = 0;
};

// Joint optimization of MGP and classifier with balanced batches, Adam and
// early stopping on validation AUROC. `resume` continues a previous run;
// `on_epoch` receives every epoch record as it is produced.
TrainResult train(const TrainData& data, const TrainConfig& config,
                  const std::optional<TrainState>& resume = std::nullopt,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Maximizes the mean log marginal likelihood of the observations over the
// MGP parameters only (classifier untouched). Returns the fitted parameters;
// `trace` receives the mean negative log likelihood per step.
MgpParameters fit_mgp_likelihood(const MgpParameters& init,
                                 std::span<const IrregularSeries> records,
                                 int steps, double learning_rate, int threads = 1,
                                 std::vector<double>* trace = nullptr);

struct IntRange {
  int min = 0;
  int max = 0;
};
struct RealRange {
  double min = 0.0;
  double max = 0.0;
};

struct SearchSpace {
  IntRange s_count{4, 20};
  IntRange kernel_size{2, 6};
  IntRange n_blocks{2, 12};
  IntRange hidden_channels{10, 55};
  RealRange dropout{0.0, 0.99};
  RealRange l2{0.0, 250.0};

  void validate() const;
};

struct TrialConfig {
  int s_count = 0;
  TcnConfig tcn;
};

// Uniform draws within the ranges; integers are rounded from a uniform real.
std::vector<TrialConfig> sample_trials(const SearchSpace& space, int n_trials,
                                       std::uint64_t seed);

struct TrialResult {
  TrialConfig config;
  double val_auroc = 0.0;
  double val_aupr = 0.0;
  int epochs = 0;
};

// Trains one model per sampled trial; results ranked by validation AUROC.
std::vector<TrialResult> random_search(const SearchSpace& space, int n_trials,
                                       std::uint64_t seed, const TrainData& data,
                                       const TrainConfig& base);

}  // namespace mgpatt

#endif  // MGPATT_TRAINING_HPP_
