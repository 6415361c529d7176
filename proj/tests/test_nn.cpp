// Copyright 2026 The dcc Authors
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

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>

#include "dcc/nn.hpp"
#include "dcc/rng.hpp"
#include "grad_check.hpp"

namespace {

namespace nn = dcc::nn;
using Net = nn::DenseNet<double>;

Eigen::MatrixXd random_inputs(Eigen::Index d, Eigen::Index n, std::uint64_t seed) {
  dcc::Rng rng(seed);
  Eigen::MatrixXd u(d, n);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.uniform();
  return u;
}

// Randomizes biases so every unit sees a non-trivial operating point.
void jitter_biases(Net& net, std::uint64_t seed, double scale = 0.1) {
  dcc::Rng rng(seed);
  for (auto& layer : net.layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-scale, scale);
}

double max_spectral_norm(const Net& net) {
  double s = 0.0;
  for (const auto& layer : net.layers)
    s = std::max(s, Eigen::JacobiSVD<Eigen::MatrixXd>(layer.weights).singularValues()(0));
  return s;
}

struct Shape {
  int d, n_y;
  double r;
  int expected_width, expected_depth;
};

class GradientCheck : public ::testing::TestWithParam<Shape> {};

TEST_P(GradientCheck, BackwardMatchesCentralDifferences) {
  const Shape s = GetParam();
  Net net = nn::build_net<double>(s.d, s.n_y, s.r, 4.0, 77);
  ASSERT_EQ(net.width(), s.expected_width);
  ASSERT_EQ(static_cast<int>(net.depth()), s.expected_depth);
  jitter_biases(net, 3);
  const Eigen::MatrixXd u = random_inputs(s.d, 32, 5);
  dcc::Rng rng(9);
  Eigen::RowVectorXd w(32);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1.0, 1.0);

  nn::ForwardCache<double> cache;
  nn::forward_batch(net, u, &cache);
  const Eigen::VectorXd g = nn::flatten(nn::backward(net, cache, w));
  const Eigen::Index n_params = nn::num_parameters(net);
  ASSERT_EQ(g.size(), n_params);

  // 64 random parameters plus one weight and the bias block start of every layer.
  std::vector<Eigen::Index> probe;
  for (int k = 0; k < 64; ++k) probe.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n_params))));
  Eigen::Index offset = 0;
  for (const auto& layer : net.layers) {
    probe.push_back(offset);
    probe.push_back(offset + layer.weights.size());
    offset += layer.weights.size() + layer.bias.size();
  }
  const auto r = dcc::gradcheck::check(net, g, probe, {&u}, [&](const Net& n) {
    return dcc::gradcheck::weighted_output(n, u, w);
  });
  EXPECT_LT(r.worst, 1e-4);
  EXPECT_LE(r.skipped, 3);
}

INSTANTIATE_TEST_SUITE_P(ExperimentShapes, GradientCheck,
                         ::testing::Values(Shape{2, 1190, 2.0, 42, 11},  // synthetic, per class
                                           Shape{8, 297, 12.0, 17, 9},   // diabetes, negatives
                                           Shape{8, 160, 12.0, 14, 8},   // diabetes, positives
                                           Shape{2, 20, 2.0, 11, 5}));

TEST(Architecture, Recipe) {
  const auto a = nn::architecture_for(2, 1190, 2.0, 4.0);
  EXPECT_EQ(a.depth, 11);
  EXPECT_EQ(a.width, 42);
  EXPECT_EQ(nn::architecture_for(2, 2, 2.0, 4.0).depth, 1);
  const auto b = nn::architecture_for(8, 350, 12.0, 4.0);
  EXPECT_EQ(b.width, static_cast<int>(std::lround(4.0 * std::pow(350.0, 0.25))));
  EXPECT_EQ(nn::architecture_for(2, 5, 2.0, 1.0).width, 8);
  EXPECT_THROW(nn::architecture_for(2, 1, 2.0, 4.0), std::invalid_argument);
}

TEST(Forward, ZeroNetGivesLogTwo) {
  Net net = nn::build_net<double>(2, 100, 2.0, 4.0, 1);
  for (auto& layer : net.layers) {
    layer.weights.setZero();
    layer.bias.setZero();
  }
  const Eigen::RowVectorXd out = nn::forward_batch(net, random_inputs(2, 10, 2));
  for (Eigen::Index i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out(i), std::log(2.0));
}

TEST(Forward, StrictlyPositive) {
  Net net = nn::build_net<double>(2, 1190, 2.0, 4.0, 11);
  jitter_biases(net, 4, 3.0);
  net.layers.back().bias(0) = -800.0;  // push the output far into the softplus tail
  const Eigen::RowVectorXd out = nn::forward_batch(net, random_inputs(2, 100000, 6));
  EXPECT_GT(out.minCoeff(), 0.0);
}

TEST(Forward, SingleColumnReturnsScalar) {
  const Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 12);
  const Eigen::Vector2d u(0.3, 0.8);
  const double v = nn::forward(net, u);
  Eigen::MatrixXd m(2, 1);
  m << 0.3, 0.8;
  EXPECT_EQ(v, nn::forward_batch(net, m)(0));
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 13);
  nn::ForwardCache<double> cache;
  nn::forward_batch(net, random_inputs(2, 8, 1), &cache);
  EXPECT_EQ(nn::flatten(nn::backward(net, cache, Eigen::RowVectorXd::Zero(8))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, SingleLayerClosedForm) {
  Net net;
  nn::DenseLayer<double> layer;
  layer.weights = Eigen::RowVector2d(0.7, -1.3);
  layer.bias = Eigen::VectorXd::Constant(1, 0.2);
  layer.sn_left = Eigen::VectorXd::Ones(1);
  layer.sn_right = Eigen::Vector2d(1, 0);
  net.layers.push_back(layer);
  const Eigen::Vector2d x(0.4, 0.9);
  nn::ForwardCache<double> cache;
  nn::forward_batch(net, Eigen::MatrixXd(x), &cache);
  const auto g = nn::backward(net, cache, Eigen::RowVectorXd::Constant(1, 1.0));
  const double z = 0.7 * 0.4 - 1.3 * 0.9 + 0.2;
  const double s = 1.0 / (1.0 + std::exp(-z));
  EXPECT_NEAR(g.weights[0](0, 0), s * 0.4, 1e-15);
  EXPECT_NEAR(g.weights[0](0, 1), s * 0.9, 1e-15);
  EXPECT_NEAR(g.bias[0](0), s, 1e-15);
  EXPECT_NEAR(nn::forward(net, x), std::log1p(std::exp(z)), 1e-15);
}

TEST(Backward, ShapeMismatchThrows) {
  Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 14);
  nn::ForwardCache<double> cache;
  nn::forward_batch(net, random_inputs(2, 8, 1), &cache);
  EXPECT_THROW(nn::backward(net, cache, Eigen::RowVectorXd::Zero(7)), std::invalid_argument);
  EXPECT_THROW(nn::backward(net, cache, Eigen::VectorXd::Zero(8)), std::invalid_argument);
  EXPECT_THROW(nn::forward_batch(net, random_inputs(3, 4, 1)), std::invalid_argument);
}

Net single_layer(const Eigen::MatrixXd& w) {
  Net net;
  nn::DenseLayer<double> layer;
  layer.weights = w;
  layer.bias = Eigen::VectorXd::Zero(w.rows());
  layer.sn_left = Eigen::VectorXd::Ones(w.rows()).normalized();
  layer.sn_right = Eigen::VectorXd::Ones(w.cols()).normalized();
  net.layers.push_back(layer);
  return net;
}

TEST(SpectralNormalize, IdentityIsUnchanged) {
  Net net = single_layer(Eigen::Matrix3d::Identity());
  const auto sigmas = nn::spectral_normalize(net, 30);
  EXPECT_NEAR(sigmas[0], 1.0, 1e-12);
  EXPECT_TRUE(net.layers[0].weights == Eigen::MatrixXd(Eigen::Matrix3d::Identity()));
}

TEST(SpectralNormalize, DiagonalIsScaledByTopSingularValue) {
  Net net = single_layer(Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix());
  nn::spectral_normalize(net, 60);
  EXPECT_NEAR(net.layers[0].weights(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(net.layers[0].weights(1, 1), 1.0 / 3.0, 1e-9);
}

TEST(SpectralNormalize, NormalizedNetIsAFixedPoint) {
  Net net = nn::build_net<double>(2, 1190, 2.0, 4.0, 21);
  const Net before = net;
  nn::spectral_normalize(net, 30);
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    EXPECT_LT((net.layers[l].weights - before.layers[l].weights).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SpectralNormalize, SvdOracleBound) {
  for (const auto& [d, n] : {std::pair{2, 1190}, {8, 297}, {8, 160}}) {
    Net net = nn::build_net<double>(d, n, d == 2 ? 2.0 : 12.0, 4.0, 31);
    EXPECT_LE(max_spectral_norm(net), 1.0 + 1e-3);
    // Inflate and renormalize starting from the persistent vectors.
    for (auto& layer : net.layers) layer.weights *= 5.0;
    nn::spectral_normalize(net, 30);
    EXPECT_LE(max_spectral_norm(net), 1.0 + 1e-3);
  }
}

TEST(SpectralNormalize, RejectsZeroIterations) {
  Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 1);
  EXPECT_THROW(nn::spectral_normalize(net, 0), std::invalid_argument);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 41);
  const Net before = net;
  nn::AdamState<double> state(net);
  nn::ForwardCache<double> cache;
  nn::forward_batch(net, random_inputs(2, 16, 3), &cache);
  const auto grads = nn::backward(net, cache, Eigen::RowVectorXd::Constant(16, 1.0));
  nn::adam_step(net, grads, state, 1e-3);
  const Eigen::VectorXd g = nn::flatten(grads);
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double delta = nn::parameter(net, k) - nn::parameter(const_cast<Net&>(before), k);
    if (std::abs(g(k)) > 1e-6) {
      EXPECT_GE(std::abs(delta), 0.99e-3);
      EXPECT_LE(std::abs(delta), 1e-3 + 1e-15);
      EXPECT_EQ(delta < 0, g(k) > 0);
    }
  }
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Net net = nn::build_net<double>(2, 64, 2.0, 4.0, 42);
  const Net before = net;
  nn::AdamState<double> state(net);
  nn::Gradients<double> zero;
  for (const auto& layer : net.layers) {
    zero.weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    zero.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  nn::adam_step(net, zero, state, 1e-3);
  for (std::size_t l = 0; l < net.layers.size(); ++l) EXPECT_TRUE(net.layers[l].weights == before.layers[l].weights);
}

Net train_briefly(std::uint64_t seed) {
  Net net = nn::build_net<double>(2, 300, 2.0, 4.0, seed);
  nn::AdamState<double> state(net);
  const Eigen::MatrixXd u = random_inputs(2, 64, seed + 1);
  for (int step = 0; step < 20; ++step) {
    nn::spectral_normalize(net, 1);
    nn::ForwardCache<double> cache;
    const Eigen::RowVectorXd out = nn::forward_batch(net, u, &cache);
    nn::adam_step(net, nn::backward(net, cache, -out.cwiseInverse()), state, 1e-3);
  }
  return net;
}

TEST(Determinism, SameSeedSameParameters) {
  const Net a = train_briefly(5), b = train_briefly(5);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_TRUE(a.layers[l].weights == b.layers[l].weights);
    EXPECT_TRUE(a.layers[l].bias == b.layers[l].bias);
  }
  EXPECT_FALSE(a.layers[0].weights == train_briefly(6).layers[0].weights);
}

TEST(Serialization, JsonRoundTripIsBitExact) {
  Net net = train_briefly(8);
  const Net back = nn::net_from_json<double>(nlohmann::json::parse(nn::to_json(net).dump()));
  ASSERT_EQ(back.layers.size(), net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    EXPECT_TRUE(back.layers[l].weights == net.layers[l].weights);
    EXPECT_TRUE(back.layers[l].bias == net.layers[l].bias);
    EXPECT_TRUE(back.layers[l].sn_left == net.layers[l].sn_left);
  }
  const Eigen::MatrixXd u = random_inputs(2, 50, 1);
  EXPECT_TRUE(nn::forward_batch(net, u) == nn::forward_batch(back, u));
}

TEST(FloatScalar, MatchesDoubleClosely) {
  const Net d = nn::build_net<double>(2, 300, 2.0, 4.0, 9);
  const auto f = nn::build_net<float>(2, 300, 2.0, 4.0, 9);
  const Eigen::MatrixXd u = random_inputs(2, 20, 4);
  const Eigen::RowVectorXd od = nn::forward_batch(d, u);
  const Eigen::RowVectorXf of = nn::forward_batch(f, Eigen::MatrixXf(u.cast<float>()));
  EXPECT_LT((od - of.cast<double>()).cwiseAbs().maxCoeff(), 1e-4);
}

}  // namespace
