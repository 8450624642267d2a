// neural_test.cpp
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

#include <gtest/gtest.h>

#include "nlwfa/neural.hpp"

namespace nlwfa {
namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = scale * rng.uniform(-1, 1);
  return m;
}

std::vector<LayerSpec> chain(const std::vector<int>& widths, Activation hidden, Activation output) {
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    specs.push_back({widths[i], widths[i + 1], i + 2 == widths.size() ? output : hidden});
  }
  return specs;
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over all
// parameters, with central differences of step h.
double max_gradient_error(Mlp net, const Matrix& x, const Matrix& t, double h = 1e-5) {
  const Vector analytic = backprop(net, x, t).flat;
  Vector p = net.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p(i);
    p(i) = keep + h;
    net.set_parameters(p);
    const double up = squared_error_loss(net.apply(x), t);
    p(i) = keep - h;
    net.set_parameters(p);
    const double down = squared_error_loss(net.apply(x), t);
    p(i) = keep;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  Rng rng(1);
  Mlp net(chain({3, 4, 2}, Activation::tanh, Activation::tanh), rng);
  net.set_parameters(Vector::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  EXPECT_EQ(net.apply(random_matrix(rng, 5, 3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, IdentityLayer) {
  Mlp net({Layer{Matrix::Identity(3, 3), RowVector::Zero(3), Activation::identity}}, true);
  RowVector x(3);
  x << 0.3, -2, 5;
  EXPECT_EQ(forward(net, x).output(), Matrix(x));
}

TEST(Forward, ScalarTanh) {
  Mlp net({Layer{Matrix::Ones(1, 1), RowVector::Zero(1), Activation::tanh}}, true);
  EXPECT_NEAR(net(RowVector::Constant(1, 0.5))(0), 0.46211716, 1e-8);
}

TEST(Forward, CacheHoldsEveryLayer) {
  Rng rng(2);
  Mlp net(chain({4, 3, 2}, Activation::tanh, Activation::identity), rng);
  const ForwardCache c = net.forward_batch(random_matrix(rng, 6, 4));
  ASSERT_EQ(c.post.size(), 3u);
  ASSERT_EQ(c.pre.size(), 2u);
  EXPECT_TRUE(c.post[1].isApprox(c.pre[0].array().tanh().matrix()));
  EXPECT_EQ(c.post[2], c.pre[1]);
}

TEST(Forward, IdentityActivationsComputeWeightProduct) {
  Rng rng(3);
  Mlp net(chain({5, 4, 2, 4, 5}, Activation::identity, Activation::identity), rng, false);
  const Matrix x = random_matrix(rng, 7, 5);
  Matrix product = Matrix::Identity(5, 5);
  for (const Layer& l : net.layers()) product = product * l.weights;
  EXPECT_LT((net.apply(x) - x * product).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Init, GlorotUniformBoundsAndZeroBias) {
  Rng rng(4);
  Mlp net(chain({10, 6, 10}, Activation::tanh, Activation::identity), rng);
  for (const Layer& l : net.layers()) {
    const double r = std::sqrt(6.0 / (l.in_dim() + l.out_dim()));
    EXPECT_LE(l.weights.cwiseAbs().maxCoeff(), r);
    EXPECT_GT(l.weights.cwiseAbs().maxCoeff(), 0.5 * r);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Backprop, SingleLinearLayerIsOuterProduct) {
  Rng rng(5);
  Mlp net(chain({3, 2}, Activation::identity, Activation::identity), rng);
  const Matrix x = random_matrix(rng, 1, 3), t = random_matrix(rng, 1, 2);
  const Matrix err = net.apply(x) - t;
  const Gradient g = backprop(net, x, t);
  const Matrix dw = x.transpose() * err;
  EXPECT_LT((g.flat.head(6) - dw.reshaped()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((g.flat.tail(2) - err.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backprop, ZeroErrorGivesZeroGradient) {
  Rng rng(6);
  Mlp net(chain({4, 6, 4}, Activation::tanh, Activation::identity), rng);
  const Matrix x = random_matrix(rng, 5, 4);
  const Gradient g = backprop(net, x, net.apply(x));
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_EQ(g.flat.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backprop, MatchesFiniteDifferencesOnUsedArchitectures) {
  const int k = 3, s = 10;
  Rng rng(7);
  const Matrix x = random_matrix(rng, 8, s, 0.8);
  const std::vector<std::vector<int>> autoencoders{{s, 2 * k, k, 2 * k, s}, {s, 4 * k, 2 * k, k, 2 * k, 4 * k, s}};
  for (const auto& widths : autoencoders) {
    Mlp net(chain(widths, Activation::tanh, Activation::identity), rng);
    net.set_parameters(net.parameters() + 0.1 * random_matrix(rng, net.parameter_count(), 1));
    EXPECT_LT(max_gradient_error(net, x, x), 1e-4) << widths.size() - 2 << " hidden layers";
  }
  Mlp transition(chain({k, 2 * k, k}, Activation::tanh, Activation::tanh), rng);
  const Matrix xs = random_matrix(rng, 8, k, 0.9), ts = random_matrix(rng, 8, k, 0.9);
  EXPECT_LT(max_gradient_error(transition, xs, ts), 1e-4);
}

TEST(Backprop, NoBiasLeavesBiasGradientZero) {
  Rng rng(8);
  Mlp net(chain({3, 4, 3}, Activation::tanh, Activation::identity), rng, false);
  const Matrix x = random_matrix(rng, 4, 3);
  const Gradient g = backprop(net, x, random_matrix(rng, 4, 3));
  EXPECT_EQ(g.flat.segment(12, 4).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.flat.tail(3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adamax, FirstStepHandExample) {
  AdamaxState st(1, 0.015);
  Vector theta = Vector::Ones(1);
  adamax_step(st, theta, Vector::Constant(1, 2.0));
  EXPECT_NEAR(st.m(0), 0.2, 1e-15);
  EXPECT_EQ(st.u(0), 2.0);
  EXPECT_NEAR(theta(0), 0.985, 1e-9);
}

TEST(Adamax, FirstStepIsSignTimesRate) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const double g = (rng.uniform() < 0.5 ? -1 : 1) * std::pow(10.0, rng.uniform(-3, 3));
    const double alpha = rng.uniform(1e-4, 0.1), theta0 = rng.uniform(-5, 5);
    AdamaxState st(1, alpha);
    Vector theta = Vector::Constant(1, theta0);
    adamax_step(st, theta, Vector::Constant(1, g));
    const double step = (theta0 - theta(0)) / (alpha * (g > 0 ? 1 : -1));
    EXPECT_NEAR(step, 1.0, 1e-6);
  }
}

TEST(Adamax, ZeroGradientLeavesParameters) {
  AdamaxState st(2, 0.1);
  Vector theta(2);
  theta << 1, -3;
  const Vector before = theta;
  adamax_step(st, theta, Vector::Zero(2));
  EXPECT_EQ(theta, before);
}

TEST(Adamax, MinimizesQuadratic) {
  AdamaxState st(3, 0.05);
  Vector theta(3), target(3);
  theta << 4, -2, 1;
  target << 0.5, 0.25, -1;
  for (int step = 0; step < 2000; ++step) adamax_step(st, theta, 2 * (theta - target));
  EXPECT_LT((theta - target).norm(), 1e-3);
}

TEST(Train, LearnsIdentity) {
  Rng rng(10);
  const Matrix x = random_matrix(rng, 200, 3, 0.5);
  Mlp net(chain({3, 8, 3}, Activation::tanh, Activation::identity), rng);
  const TrainResult r = train(net, x, x, TrainConfig{800, 16, 3, 0.01, true, 100});
  EXPECT_LT(r.best_loss, 1e-3);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_EQ(r.best_loss, squared_error_loss(r.net.apply(x), x));
}

TEST(Train, DeterministicUnderSeed) {
  Rng a(11), b(11);
  const Matrix x = random_matrix(a, 50, 4, 0.5);
  random_matrix(b, 50, 4, 0.5);
  Mlp na(chain({4, 2, 4}, Activation::tanh, Activation::identity), a);
  Mlp nb(chain({4, 2, 4}, Activation::tanh, Activation::identity), b);
  const TrainConfig cfg{60, 8, 42, 0.01, true, 50};
  const TrainResult ra = train(na, x, x, cfg), rb = train(nb, x, x, cfg);
  EXPECT_EQ(ra.loss_history, rb.loss_history);
  EXPECT_EQ(ra.net.parameters(), rb.net.parameters());
}

TEST(Train, HistoryStartsAtEpochZero) {
  Rng rng(12);
  const Matrix x = random_matrix(rng, 20, 2);
  Mlp net(chain({2, 2}, Activation::identity, Activation::identity), rng);
  const TrainResult r = train(net, x, x, TrainConfig{5, 4, 1, 0.01, false, std::nullopt});
  ASSERT_EQ(r.loss_history.size(), 6u);
  EXPECT_EQ(r.loss_history[0], squared_error_loss(net.apply(x), x));
}

TEST(Train, DivergenceIsReported) {
  Rng rng(13);
  Matrix x = random_matrix(rng, 10, 2);
  x(0, 0) = INFINITY;
  Mlp net(chain({2, 2}, Activation::identity, Activation::identity), rng);
  EXPECT_THROW(train(net, x, x, TrainConfig{5, 4, 1, 0.01, true, 50}), TrainingDiverged);
}

TEST(Train, RejectsBadConfig) {
  Rng rng(14);
  const Matrix x = random_matrix(rng, 4, 2);
  Mlp net(chain({2, 2}, Activation::identity, Activation::identity), rng);
  EXPECT_THROW(train(net, x, x, TrainConfig{0, 4, 1, 0.01, true, 50}), ConfigError);
  EXPECT_THROW(train(net, x, x, TrainConfig{5, 4, 1, -1.0, true, 50}), ConfigError);
  EXPECT_THROW(train(net, x, Matrix(3, 2), TrainConfig{}), ConfigError);
}

TEST(Mlp, SliceComposesToWhole) {
  Rng rng(15);
  Mlp net(chain({6, 4, 2, 4, 6}, Activation::tanh, Activation::identity), rng);
  const Matrix x = random_matrix(rng, 3, 6);
  EXPECT_TRUE(net.slice(2, 4).apply(net.slice(0, 2).apply(x)).isApprox(net.apply(x), 1e-14));
}

}  // namespace
}  // namespace nlwfa
