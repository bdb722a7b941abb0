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

#ifndef MGPATT_ATTTCN_HPP_
#define MGPATT_ATTTCN_HPP_

#include <array>
#include <atomic>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgpatt/random.hpp"

namespace mgpatt {

// Search-space bounds, not hard inference limits; validate() only rejects
// values that make the network ill-formed.
struct TcnConfig {
  int kernel_size = 3;
  int n_blocks = 2;
  int hidden_channels = 16;
  double dropout = 0.0;
  double l2 = 1.0;

  void validate() const;
};

// Causal 1-D convolution over rows (time). taps[r] (out x in) multiplies
// input row j - (K - 1 - r) when producing output row j; rows before 0 are
// zero padding.
struct ConvLayer {
  std::vector<Eigen::MatrixXd> taps;
  Eigen::VectorXd bias;

  int in_channels() const { return taps.empty() ? 0 : int(taps[0].cols()); }
  int out_channels() const { return int(bias.size()); }
  int kernel_size() const { return int(taps.size()); }

  static ConvLayer glorot(int in, int out, int kernel_size, Rng& rng);
  ConvLayer zeros_like() const;
};

Eigen::MatrixXd causal_conv(const ConvLayer& layer, const Eigen::MatrixXd& x);

// Two causal convolutions, each followed by ReLU and dropout. No identity
// shortcut.
struct ResidualBlock {
  ConvLayer first;
  ConvLayer second;
};

struct TcnStack {
  std::vector<ResidualBlock> blocks;

  // hidden_channels wide inside; the last convolution emits out_channels.
  static TcnStack init(const TcnConfig& config, int in_channels,
                       int out_channels, Rng& rng);
  TcnStack zeros_like() const;
  double squared_weight_norm() const;  // taps only, biases excluded

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      ConvLayer* layers[2] = {&blocks[b].first, &blocks[b].second};
      for (int c = 0; c < 2; ++c) {
        const std::string name =
            prefix + ".block" + std::to_string(b) + ".conv" + std::to_string(c);
        for (std::size_t r = 0; r < layers[c]->taps.size(); ++r) {
          Eigen::MatrixXd& w = layers[c]->taps[r];
          f(name + ".tap" + std::to_string(r),
            std::span<double>(w.data(), w.size()));
        }
        f(name + ".bias", std::span<double>(layers[c]->bias.data(),
                                            layers[c]->bias.size()));
      }
    }
  }
};

// Per-convolution intermediates for the reverse pass.
struct ConvCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd pre_activation;
  Eigen::MatrixXd dropout_scale;  // empty when dropout is inactive
};
struct TcnCache {
  std::vector<ConvCache> layers;
};

// `rng` == nullptr disables dropout (evaluation mode).
Eigen::MatrixXd causal_residual_block(const Eigen::MatrixXd& input,
                                      const ResidualBlock& block,
                                      double dropout, Rng* rng,
                                      TcnCache* cache = nullptr);

Eigen::MatrixXd tcn_forward(const TcnStack& stack, const Eigen::MatrixXd& input,
                            double dropout, Rng* rng, TcnCache* cache = nullptr);

// Returns dLoss/dinput and accumulates weight gradients into `grad`.
Eigen::MatrixXd tcn_backward(const TcnStack& stack, const TcnCache& cache,
                             const Eigen::MatrixXd& output_grad,
                             TcnStack& grad);

// Two TCN branches plus the per-class attention projections.
struct AttTcnParameters {
  TcnStack tcn_alpha;                 // produces z
  TcnStack tcn_beta;                  // produces z'
  Eigen::MatrixXd w_alpha;            // C x 2, column d = W_{alpha,d}
  Eigen::VectorXd b_alpha;            // 2
  std::array<Eigen::MatrixXd, 2> w_beta;  // C x C each
  std::array<Eigen::VectorXd, 2> b_beta;  // C each

  int channels() const { return int(w_alpha.rows()); }
  static AttTcnParameters init(int channels, const TcnConfig& config, Rng& rng);
  AttTcnParameters zeros_like() const;

  template <typename F>
  void visit(F&& f) {
    tcn_alpha.visit("att.tcn_alpha", f);
    tcn_beta.visit("att.tcn_beta", f);
    f(std::string("att.w_alpha"), std::span<double>(w_alpha.data(), w_alpha.size()));
    f(std::string("att.b_alpha"), std::span<double>(b_alpha.data(), b_alpha.size()));
    for (int d = 0; d < 2; ++d) {
      const std::string s = std::to_string(d);
      f("att.w_beta" + s, std::span<double>(w_beta[d].data(), w_beta[d].size()));
      f("att.b_beta" + s, std::span<double>(b_beta[d].data(), b_beta[d].size()));
    }
  }
};

struct Embedding {
  Eigen::MatrixXd z;        // N x C
  Eigen::MatrixXd z_prime;  // N x C
  TcnCache alpha_cache;
  TcnCache beta_cache;
};

Embedding embed(const Eigen::MatrixXd& y_mc, const AttTcnParameters& params,
                double dropout = 0.0, Rng* rng = nullptr);

// Which attention arms are active; the ablations replace alpha by the
// uniform distribution over unpadded rows, or beta by ones.
struct AttentionArms {
  bool alpha = true;
  bool beta = true;
};

struct AttentionWeights {
  Eigen::MatrixXd logits;               // N x 2 (alpha logits)
  Eigen::MatrixXd alpha;                // N x 2, softmax over unpadded rows
  std::array<Eigen::MatrixXd, 2> beta;  // N x C each, in [0, 1]
  bool uniform_alpha = false;
};

// Throws InputError when every row is padded.
AttentionWeights attention(const Eigen::MatrixXd& z,
                           const Eigen::MatrixXd& z_prime,
                           const AttTcnParameters& params,
                           const std::vector<bool>& padded,
                           AttentionArms arms = {});

struct AttentionTrace {
  Eigen::MatrixXd alpha;                        // N x 2
  std::array<Eigen::MatrixXd, 2> beta;          // N x C per class
  std::array<Eigen::MatrixXd, 2> contributions; // alpha * beta * y
  Eigen::Vector2d scores = Eigen::Vector2d::Zero();
  Eigen::Vector2d probabilities = Eigen::Vector2d::Constant(0.5);
  // Row i: softmax of the score built from rows <= i, with alpha
  // renormalized over that prefix. The last row equals `probabilities`.
  Eigen::MatrixXd step_probabilities;  // N x 2
};

AttentionTrace predict(const Eigen::MatrixXd& y_mc,
                       const AttentionWeights& weights,
                       const std::vector<bool>& padded);

// softmax(sum of contributions) -- what an exported trace implies.
Eigen::Vector2d probabilities_from_contributions(
    const std::array<Eigen::MatrixXd, 2>& contributions);

// Empty string when the trace satisfies the attention invariants.
std::string check_trace_invariants(const AttentionTrace& trace,
                                   const std::vector<bool>& padded,
                                   double tol = 1e-6);

// Process-wide switch: when enabled, every predict() call verifies
// check_trace_invariants and the faithfulness identity, counting violations.
struct ForwardInvariantMonitor {
  static void enable(bool on);
  static bool enabled();
  static long checks();
  static long violations();
  static std::string last_violation();
  static void reset();
};

// Gradient of -log p_label w.r.t. the inputs and parameters of the attention
// head, given cached intermediates. Adds into `grad`; returns dLoss/dy_mc.
Eigen::MatrixXd attention_backward(const Eigen::MatrixXd& y_mc,
                                   const Embedding& embedding,
                                   const AttentionWeights& weights,
                                   const AttentionTrace& trace,
                                   const std::vector<bool>& padded, int label,
                                   const AttTcnParameters& params,
                                   AttentionArms arms, AttTcnParameters& grad);

}  // namespace mgpatt

#endif  // MGPATT_ATTTCN_HPP_
