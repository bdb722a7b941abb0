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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mgpatt/atttcn.hpp"
#include "mgpatt/errors.hpp"
#include "mgpatt/model.hpp"
#include "mgpatt/random.hpp"

namespace {

using mgpatt::AttTcnParameters;
using mgpatt::ConvLayer;
using mgpatt::Rng;
using mgpatt::TcnConfig;

TcnConfig small_config(int kernel_size = 3, int blocks = 2, int hidden = 5) {
  TcnConfig c;
  c.kernel_size = kernel_size;
  c.n_blocks = blocks;
  c.hidden_channels = hidden;
  c.dropout = 0.0;
  return c;
}

// Stored weights plus generic biases so no pre-activation sits on a ReLU kink.
AttTcnParameters random_params(int channels, const TcnConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  AttTcnParameters p = AttTcnParameters::init(channels, config, rng);
  std::normal_distribution<double> n(0.0, 0.3);
  auto jiggle = [&](const std::string&, std::span<double> v) {
    for (double& x : v) x += n(rng);
  };
  p.visit(jiggle);
  return p;
}

Eigen::MatrixXd random_input(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  return mgpatt::standard_normal(rows, cols, rng);
}

// Direct loops: y[j, o] = b[o] + sum_r sum_i taps[r](o, i) x[j - (K - 1 - r), i].
Eigen::MatrixXd reference_conv(const ConvLayer& layer, const Eigen::MatrixXd& x) {
  const int k = layer.kernel_size();
  Eigen::MatrixXd y(x.rows(), layer.out_channels());
  for (Eigen::Index j = 0; j < x.rows(); ++j)
    for (int o = 0; o < layer.out_channels(); ++o) {
      double acc = layer.bias[o];
      for (int r = 0; r < k; ++r) {
        const Eigen::Index src = j - (k - 1 - r);
        if (src < 0) continue;
        for (int i = 0; i < layer.in_channels(); ++i) acc += layer.taps[r](o, i) * x(src, i);
      }
      y(j, o) = acc;
    }
  return y;
}

Eigen::MatrixXd reference_tcn(const mgpatt::TcnStack& stack, Eigen::MatrixXd h) {
  for (const auto& b : stack.blocks) {
    h = reference_conv(b.first, h).cwiseMax(0.0);
    h = reference_conv(b.second, h).cwiseMax(0.0);
  }
  return h;
}

TEST(CausalBlock, ZeroWeightsGiveZeroOutput) {
  Rng rng(1);
  mgpatt::ResidualBlock block{ConvLayer::glorot(3, 4, 3, rng), ConvLayer::glorot(4, 3, 3, rng)};
  block.first = block.first.zeros_like();
  block.second = block.second.zeros_like();
  const Eigen::MatrixXd out =
      mgpatt::causal_residual_block(random_input(7, 3, 2), block, 0.0, nullptr);
  EXPECT_EQ(out.rows(), 7);
  EXPECT_EQ(out.cols(), 3);
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(CausalBlock, UnitKernelByHand) {
  mgpatt::ResidualBlock block;
  block.first.taps = {Eigen::MatrixXd::Ones(1, 1)};
  block.first.bias = Eigen::VectorXd::Zero(1);
  block.second = block.first;
  Eigen::MatrixXd x(3, 1);
  x << 1.5, -2.0, 3.0;
  const Eigen::MatrixXd out = mgpatt::causal_residual_block(x, block, 0.0, nullptr);
  EXPECT_DOUBLE_EQ(out(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(out(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(out(2, 0), 3.0);
}

TEST(CausalBlock, ShapeMismatchIsConfigError) {
  Rng rng(1);
  mgpatt::ResidualBlock block{ConvLayer::glorot(3, 4, 2, rng), ConvLayer::glorot(4, 3, 2, rng)};
  EXPECT_THROW(mgpatt::causal_residual_block(random_input(5, 2, 1), block, 0.0, nullptr),
               mgpatt::ConfigError);
}

TEST(CausalBlock, LaterRowsDoNotLeakBackwards) {
  Rng rng(3);
  mgpatt::ResidualBlock block{ConvLayer::glorot(2, 6, 4, rng), ConvLayer::glorot(6, 2, 4, rng)};
  block.first.bias.setConstant(0.1);
  const Eigen::MatrixXd x = random_input(10, 2, 4);
  const Eigen::MatrixXd base = mgpatt::causal_residual_block(x, block, 0.0, nullptr);
  for (int j = 0; j < 10; ++j) {
    Eigen::MatrixXd y = x;
    y.row(j).array() += 5.0;
    const Eigen::MatrixXd out = mgpatt::causal_residual_block(y, block, 0.0, nullptr);
    for (int i = 0; i < j; ++i) EXPECT_TRUE(out.row(i) == base.row(i)) << j << " " << i;
  }
}

TEST(Tcn, MatchesReferenceForward) {
  for (int k = 1; k <= 4; ++k) {
    const AttTcnParameters p = random_params(4, small_config(k, 3, 6), 10 + k);
    const Eigen::MatrixXd x = random_input(9, 4, 20 + k);
    const Eigen::MatrixXd z = mgpatt::tcn_forward(p.tcn_alpha, x, 0.0, nullptr);
    EXPECT_LT((z - reference_tcn(p.tcn_alpha, x)).cwiseAbs().maxCoeff(), 1e-12);
    const auto e = mgpatt::embed(x, p);
    EXPECT_LT((e.z_prime - reference_tcn(p.tcn_beta, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(e.z.cols(), 4);
  }
}

TEST(Tcn, ZeroInputBiasFreeGivesZeroEmbeddings) {
  Rng rng(5);
  const AttTcnParameters p = AttTcnParameters::init(3, small_config(), rng);
  const auto e = mgpatt::embed(Eigen::MatrixXd::Zero(6, 3), p);
  EXPECT_TRUE(e.z.isZero(0.0));
  EXPECT_TRUE(e.z_prime.isZero(0.0));
}

TEST(Tcn, BranchesDoNotShareWeights) {
  const AttTcnParameters p = random_params(3, small_config(), 7);
  EXPECT_FALSE(p.tcn_alpha.blocks[0].first.taps[0] == p.tcn_beta.blocks[0].first.taps[0]);
  AttTcnParameters q = p;
  q.tcn_beta.blocks[0].first.taps[0].array() += 1.0;
  const Eigen::MatrixXd x = random_input(5, 3, 8);
  EXPECT_TRUE(mgpatt::embed(x, p).z == mgpatt::embed(x, q).z);
}

TEST(Tcn, DropoutOnlyWithRng) {
  TcnConfig c = small_config();
  c.dropout = 0.5;
  const AttTcnParameters p = random_params(3, c, 9);
  const Eigen::MatrixXd x = random_input(8, 3, 10);
  const Eigen::MatrixXd eval = mgpatt::tcn_forward(p.tcn_alpha, x, 0.5, nullptr);
  EXPECT_TRUE(eval == reference_tcn(p.tcn_alpha, x) ||
              (eval - reference_tcn(p.tcn_alpha, x)).cwiseAbs().maxCoeff() < 1e-12);
  Rng rng(1);
  EXPECT_FALSE(mgpatt::tcn_forward(p.tcn_alpha, x, 0.5, &rng) == eval);
}

TEST(Attention, ZeroAlphaWeightsAreUniform) {
  AttTcnParameters p = random_params(4, small_config(), 11);
  p.w_alpha.setZero();
  p.b_alpha.setZero();
  const Eigen::MatrixXd z = random_input(25, 4, 1), zp = random_input(25, 4, 2);
  const auto w = mgpatt::attention(z, zp, p, std::vector<bool>(25, false));
  for (int j = 0; j < 25; ++j)
    for (int d = 0; d < 2; ++d) EXPECT_NEAR(w.alpha(j, d), 1.0 / 25.0, 1e-15);
}

TEST(Attention, ZeroBetaWeightsGiveHalf) {
  AttTcnParameters p = random_params(4, small_config(), 12);
  for (int d = 0; d < 2; ++d) {
    p.w_beta[d].setZero();
    p.b_beta[d].setZero();
  }
  const auto w = mgpatt::attention(random_input(6, 4, 1), random_input(6, 4, 2), p,
                                   std::vector<bool>(6, false));
  for (int d = 0; d < 2; ++d) EXPECT_TRUE((w.beta[d].array() == 0.5).all());
}

TEST(Attention, MatchesBruteForce) {
  const AttTcnParameters p = random_params(3, small_config(), 13);
  const Eigen::MatrixXd z = random_input(7, 3, 3), zp = random_input(7, 3, 4);
  std::vector<bool> padded(7, false);
  padded[0] = padded[1] = true;
  const auto w = mgpatt::attention(z, zp, p, padded);
  for (int d = 0; d < 2; ++d) {
    double total = 0.0;
    for (int j = 2; j < 7; ++j) {
      double logit = p.b_alpha[d];
      for (int c = 0; c < 3; ++c) logit += z(j, c) * p.w_alpha(c, d);
      total += std::exp(logit);
    }
    for (int j = 0; j < 7; ++j) {
      double logit = p.b_alpha[d];
      for (int c = 0; c < 3; ++c) logit += z(j, c) * p.w_alpha(c, d);
      const double expected = padded[j] ? 0.0 : std::exp(logit) / total;
      EXPECT_NEAR(w.alpha(j, d), expected, 1e-14);
      for (int m = 0; m < 3; ++m) {
        double pre = p.b_beta[d][m];
        for (int c = 0; c < 3; ++c) pre += zp(j, c) * p.w_beta[d](c, m);
        EXPECT_NEAR(w.beta[d](j, m), 1.0 / (1.0 + std::exp(-pre)), 1e-14);
      }
    }
  }
}

TEST(Attention, AllPaddedIsInputError) {
  const AttTcnParameters p = random_params(2, small_config(), 14);
  EXPECT_THROW(mgpatt::attention(random_input(3, 2, 1), random_input(3, 2, 2), p,
                                 std::vector<bool>(3, true)),
               mgpatt::InputError);
}

mgpatt::AttentionWeights fixed_weights(int n, int c, double alpha, double beta) {
  mgpatt::AttentionWeights w;
  w.logits = Eigen::MatrixXd::Zero(n, 2);
  w.alpha = Eigen::MatrixXd::Constant(n, 2, alpha);
  w.beta = {Eigen::MatrixXd::Constant(n, c, beta), Eigen::MatrixXd::Constant(n, c, beta)};
  return w;
}

TEST(Predict, ZeroInputIsEven) {
  const auto t = mgpatt::predict(Eigen::MatrixXd::Zero(4, 3), fixed_weights(4, 3, 0.25, 0.7),
                                 std::vector<bool>(4, false));
  EXPECT_DOUBLE_EQ(t.scores[0], 0.0);
  EXPECT_DOUBLE_EQ(t.scores[1], 0.0);
  EXPECT_DOUBLE_EQ(t.probabilities[0], 0.5);
  EXPECT_DOUBLE_EQ(t.probabilities[1], 0.5);
}

TEST(Predict, SingleStepOnesSymmetric) {
  const auto t = mgpatt::predict(Eigen::MatrixXd::Ones(1, 5), fixed_weights(1, 5, 1.0, 1.0),
                                 std::vector<bool>(1, false));
  EXPECT_DOUBLE_EQ(t.scores[0], 5.0);
  EXPECT_DOUBLE_EQ(t.scores[1], 5.0);
  EXPECT_DOUBLE_EQ(t.probabilities[1], 0.5);
}

TEST(Predict, TripleLoopOracle) {
  const AttTcnParameters p = random_params(2, small_config(2, 2, 3), 15);
  const Eigen::MatrixXd y = random_input(3, 2, 5);
  const auto e = mgpatt::embed(y, p);
  const std::vector<bool> padded(3, false);
  const auto w = mgpatt::attention(e.z, e.z_prime, p, padded);
  const auto t = mgpatt::predict(y, w, padded);
  double score[2] = {0.0, 0.0};
  for (int d = 0; d < 2; ++d)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 2; ++m) {
        const double g = w.alpha(j, d) * w.beta[d](j, m) * y(j, m);
        EXPECT_NEAR(t.contributions[d](j, m), g, 1e-15);
        score[d] += g;
      }
  const double p1 = std::exp(score[1]) / (std::exp(score[0]) + std::exp(score[1]));
  EXPECT_NEAR(t.scores[0], score[0], 1e-14);
  EXPECT_NEAR(t.probabilities[1], p1, 1e-14);
  EXPECT_NEAR(t.probabilities.sum(), 1.0, 1e-15);
  // Step 0 scores with alpha renormalized over row 0 alone.
  double s0[2];
  for (int d = 0; d < 2; ++d) s0[d] = w.beta[d](0, 0) * y(0, 0) + w.beta[d](0, 1) * y(0, 1);
  EXPECT_NEAR(t.step_probabilities(0, 1), 1.0 / (1.0 + std::exp(s0[0] - s0[1])), 1e-14);
  EXPECT_TRUE(t.step_probabilities.row(2) == t.probabilities.transpose());
}

TEST(Predict, ContributionsReproduceProbabilities) {
  for (int rep = 0; rep < 20; ++rep) {
    const AttTcnParameters p = random_params(4, small_config(), 100 + rep);
    const Eigen::MatrixXd y = 3.0 * random_input(8, 4, 200 + rep);
    std::vector<bool> padded(8, false);
    for (int j = 0; j < rep % 5; ++j) padded[j] = true;
    const auto e = mgpatt::embed(y, p);
    const auto w = mgpatt::attention(e.z, e.z_prime, p, padded);
    const auto t = mgpatt::predict(y, w, padded);
    EXPECT_LT((mgpatt::probabilities_from_contributions(t.contributions) - t.probabilities)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
    EXPECT_EQ(mgpatt::check_trace_invariants(t, padded), "");
  }
}

TEST(Predict, InvariantCheckerFlagsBadTraces) {
  const std::vector<bool> padded(3, false);
  auto t = mgpatt::predict(Eigen::MatrixXd::Ones(3, 2), fixed_weights(3, 2, 1.0 / 3.0, 0.5),
                           padded);
  EXPECT_EQ(mgpatt::check_trace_invariants(t, padded), "");
  auto bad = t;
  bad.alpha(0, 0) = 0.5;
  EXPECT_NE(mgpatt::check_trace_invariants(bad, padded), "");
  bad = t;
  bad.beta[1](2, 1) = 1.5;
  EXPECT_NE(mgpatt::check_trace_invariants(bad, padded), "");
  bad = t;
  bad.probabilities = Eigen::Vector2d(0.7, 0.7);
  EXPECT_NE(mgpatt::check_trace_invariants(bad, padded), "");
}

TEST(Predict, StepProbabilitiesAreCausal) {
  for (int rep = 0; rep < 10; ++rep) {
    const AttTcnParameters p = random_params(3, small_config(3, 2, 4), 300 + rep);
    const Eigen::MatrixXd y = random_input(10, 3, 400 + rep);
    std::vector<bool> padded(10, false);
    padded[0] = true;
    auto run = [&](const Eigen::MatrixXd& in) {
      const auto e = mgpatt::embed(in, p);
      return mgpatt::predict(in, mgpatt::attention(e.z, e.z_prime, p, padded), padded)
          .step_probabilities;
    };
    const Eigen::MatrixXd base = run(y);
    for (int j = 1; j < 10; ++j) {
      Eigen::MatrixXd in = y;
      in.row(j).array() += 2.0;
      const Eigen::MatrixXd out = run(in);
      for (int i = 0; i < j; ++i) EXPECT_TRUE(out.row(i) == base.row(i));
      EXPECT_FALSE(out.row(9) == base.row(9));
    }
  }
}

TEST(Ablation, UniformAlphaEqualsNoAlphaArm) {
  AttTcnParameters p = random_params(3, small_config(), 16);
  p.w_alpha.setZero();
  p.b_alpha.setZero();
  const Eigen::MatrixXd y = random_input(6, 3, 6);
  std::vector<bool> padded(6, false);
  padded[0] = true;
  const auto e = mgpatt::embed(y, p);
  const auto a = mgpatt::predict(y, mgpatt::attention(e.z, e.z_prime, p, padded), padded);
  const auto b = mgpatt::predict(
      y, mgpatt::attention(e.z, e.z_prime, p, padded, {false, true}), padded);
  EXPECT_NEAR(a.probabilities[1], b.probabilities[1], 1e-14);
  EXPECT_LT((a.step_probabilities - b.step_probabilities).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Ablation, SaturatedBetaEqualsNoBetaArm) {
  AttTcnParameters p = random_params(3, small_config(), 17);
  for (int d = 0; d < 2; ++d) {
    p.w_beta[d].setZero();
    p.b_beta[d].setConstant(40.0);
  }
  const Eigen::MatrixXd y = random_input(6, 3, 7);
  const std::vector<bool> padded(6, false);
  const auto e = mgpatt::embed(y, p);
  const auto a = mgpatt::predict(y, mgpatt::attention(e.z, e.z_prime, p, padded), padded);
  const auto b = mgpatt::predict(
      y, mgpatt::attention(e.z, e.z_prime, p, padded, {true, false}), padded);
  EXPECT_EQ(a.probabilities[1], b.probabilities[1]);
}

double head_loss(const AttTcnParameters& p, const Eigen::MatrixXd& y,
                 const std::vector<bool>& padded, int label, mgpatt::AttentionArms arms) {
  const auto e = mgpatt::embed(y, p);
  const auto t = mgpatt::predict(y, mgpatt::attention(e.z, e.z_prime, p, padded, arms), padded);
  return -std::log(t.probabilities[label]);
}

class AttentionGradient : public ::testing::TestWithParam<int> {};

TEST_P(AttentionGradient, MatchesCentralDifferences) {
  const int variant = GetParam();
  const mgpatt::AttentionArms arms{variant != 1, variant != 2};
  for (int rep = 0; rep < 4; ++rep) {
    AttTcnParameters p = random_params(3, small_config(2, 2, 4), 500 + rep + 10 * variant);
    const Eigen::MatrixXd y = random_input(6, 3, 600 + rep);
    std::vector<bool> padded(6, false);
    padded[0] = rep % 2 == 1;
    const int label = rep % 2;
    const auto e = mgpatt::embed(y, p);
    const auto w = mgpatt::attention(e.z, e.z_prime, p, padded, arms);
    const auto t = mgpatt::predict(y, w, padded);
    AttTcnParameters g = p.zeros_like();
    const Eigen::MatrixXd dy =
        mgpatt::attention_backward(y, e, w, t, padded, label, p, arms, g);
    std::vector<double> analytic;
    g.visit([&](const std::string&, std::span<double> v) {
      analytic.insert(analytic.end(), v.begin(), v.end());
    });
    std::size_t i = 0;
    p.visit([&](const std::string& name, std::span<double> v) {
      for (double& x : v) {
        const double keep = x, h = 1e-6;
        x = keep + h;
        const double up = head_loss(p, y, padded, label, arms);
        x = keep - h;
        const double down = head_loss(p, y, padded, label, arms);
        x = keep;
        const double fd = (up - down) / (2 * h);
        const double rel =
            std::fabs(fd - analytic[i]) / std::max(1e-6, std::fabs(fd) + std::fabs(analytic[i]));
        EXPECT_LT(rel, 1e-4) << name << " fd " << fd << " an " << analytic[i];
        ++i;
      }
    });
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd yp = y, ym = y;
        yp(r, c) += 1e-6;
        ym(r, c) -= 1e-6;
        const double fd = (head_loss(p, yp, padded, label, arms) -
                           head_loss(p, ym, padded, label, arms)) / 2e-6;
        EXPECT_NEAR(dy(r, c), fd, 1e-6 + 1e-4 * std::fabs(fd));
      }
  }
}

INSTANTIATE_TEST_SUITE_P(Arms, AttentionGradient, ::testing::Values(0, 1, 2));

TEST(TcnConfig, Validation) {
  TcnConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), mgpatt::ConfigError);
  c = TcnConfig{};
  c.l2 = -1;
  EXPECT_THROW(c.validate(), mgpatt::ConfigError);
  c = TcnConfig{};
  c.kernel_size = 0;
  EXPECT_THROW(c.validate(), mgpatt::ConfigError);
}

TEST(Monitor, CountsForwardPasses) {
  const long before = mgpatt::ForwardInvariantMonitor::checks();
  mgpatt::predict(Eigen::MatrixXd::Ones(2, 2), fixed_weights(2, 2, 0.5, 0.5),
                  std::vector<bool>(2, false));
  EXPECT_EQ(mgpatt::ForwardInvariantMonitor::checks(), before + 1);
}

}  // namespace
