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

#ifndef MGPATT_MODEL_HPP_
#define MGPATT_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mgpatt/atttcn.hpp"
#include "mgpatt/mgp.hpp"
#include "mgpatt/series.hpp"

namespace mgpatt {

enum class Ablation {
  kFull,
  kNoAlpha,
  kNoBeta,
  kSeKernel,
  kMgpLogregHead,
  kMgpTcnHead,
};

std::string_view to_string(Ablation ablation);
// Throws ConfigError on unknown names.
Ablation ablation_from_string(std::string_view name);

struct ModelConfig {
  int n_features = 0;  // M, dynamic
  int n_static = 0;    // Q
  int n_grid = kDefaultGridSize;
  Ablation ablation = Ablation::kFull;
  TcnConfig tcn;
  std::vector<double> init_lengthscales = {3.0, 30.0};
  double init_factor = 0.7;
  double init_noise = 0.5;

  int channels() const { return n_features + n_static; }
  void validate() const;
};

// MGP followed by a linear logit over the flattened grid sample.
struct LinearHead {
  Eigen::MatrixXd weights;  // N x C
  Eigen::VectorXd bias;     // 1

  template <typename F>
  void visit(F&& f) {
    f(std::string("logreg.weights"), std::span<double>(weights.data(), weights.size()));
    f(std::string("logreg.bias"), std::span<double>(bias.data(), bias.size()));
  }
};

// MGP followed by one TCN, last-step pooling and a two-class linear layer.
struct TcnLinearHead {
  TcnStack tcn;
  Eigen::MatrixXd weights;  // 2 x C
  Eigen::VectorXd bias;     // 2

  template <typename F>
  void visit(F&& f) {
    tcn.visit("tcnhead.tcn", f);
    f(std::string("tcnhead.weights"), std::span<double>(weights.data(), weights.size()));
    f(std::string("tcnhead.bias"), std::span<double>(bias.data(), bias.size()));
  }
};

using HeadParameters = std::variant<AttTcnParameters, TcnLinearHead, LinearHead>;

struct Model {
  ModelConfig config;
  MgpParameters mgp;
  HeadParameters head;

  static Model init(const ModelConfig& config, std::uint64_t seed);
  Model zeros_like() const;

  template <typename F>
  void visit(F&& f) {
    mgp.visit(f);
    std::visit([&](auto& h) { h.visit(f); }, head);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<Model*>(this)->visit(
        [&](const std::string& name, std::span<double> v) {
          f(name, std::span<const double>(v.data(), v.size()));
        });
  }

  std::size_t n_parameters() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);

  // Sum of squares of the L2-penalized weights (convolution taps, or the
  // linear weights of the logistic-regression head).
  double penalized_squared_norm() const;
  // Adds d(penalized_squared_norm)/dtheta * scale into `grad`.
  void add_penalty_gradient(double scale, Model& grad) const;
};

// Prediction for one patient averaged over Monte Carlo samples.
struct PatientPrediction {
  double probability = 0.5;  // mean over samples of P(label = 1)
  PosteriorGaussian posterior;
  GridSampleBatch samples;
  // Attention heads only: one trace per Monte Carlo sample.
  std::vector<AttentionTrace> traces;
  std::vector<double> sample_probabilities;
  Eigen::MatrixXd step_probabilities;  // N x 2, mean over samples
};

PatientPrediction predict_patient(const Model& model,
                                  const IrregularSeries& series, int s_count,
                                  std::uint64_t seed,
                                  const Eigen::MatrixXd* grid_prior = nullptr);

// Unscaled gradient pieces for one patient (sum over its samples).
struct PatientGradient {
  std::vector<double> head;  // flattened like Model::flatten, head part only
  KernelGradient kernel;
  Eigen::MatrixXd grid_prior;
};

struct PatientLoss {
  double loss = 0.0;         // mean cross-entropy over samples
  double probability = 0.5;  // mean P(label = 1)
};

// Forward (and optionally backward) pass for one labelled patient.
// Dropout is active when `dropout_active`; seeds derive from `seed`.
PatientLoss patient_loss(const Model& model, const IrregularSeries& series,
                         int s_count, std::uint64_t seed, bool dropout_active,
                         const Eigen::MatrixXd& grid_prior,
                         PatientGradient* grad);

// Cross-entropy of a head on one fixed classifier input, with the gradient
// w.r.t. the input and head parameters. For tests and sample-level oracles.
struct HeadEvaluation {
  Eigen::Vector2d probabilities;
  Eigen::MatrixXd step_probabilities;
  Eigen::MatrixXd input_grad;            // empty unless head_grad was given
  std::optional<AttentionTrace> trace;   // attention heads only
};
HeadEvaluation evaluate_head(const Model& model, const Eigen::MatrixXd& y_mc,
                             const std::vector<bool>& padded, int label,
                             Rng* dropout_rng, HeadParameters* head_grad);

}  // namespace mgpatt

#endif  // MGPATT_MODEL_HPP_
