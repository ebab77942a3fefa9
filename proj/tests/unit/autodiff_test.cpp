#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "uavnet/autodiff.hpp"
#include "uavnet/grad_check.hpp"
#include "uavnet/optim.hpp"
#include "uavnet/tensor.hpp"

namespace uavnet::ad {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.storage()) v = dist(rng);
  return t;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(TensorTest, ConstructionChecksShape) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_DOUBLE_EQ(m.at(1, 2), 6.0);
}

TEST(TensorTest, FanInInitStaysInBounds) {
  std::mt19937_64 rng(1);
  Parameter p("w", Tensor({8, 16}));
  init_uniform_fan_in(p, 16, rng);
  const double bound = 1.0 / std::sqrt(16.0);
  double spread = 0.0;
  for (double v : p.value.storage()) {
    EXPECT_LE(std::abs(v), bound);
    spread = std::max(spread, std::abs(v));
  }
  EXPECT_GT(spread, 0.5 * bound);
  EXPECT_TRUE(p.grad.same_shape(p.value));
}

TEST(LinearTest, IdentityWeights) {
  Tape tape;
  const Var y = linear(tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
                       tape.constant(Tensor::vector({0, 0})), tape.constant(Tensor::vector({3, 4})));
  EXPECT_EQ(y.value(), Tensor::vector({3, 4}));
}

TEST(LinearTest, ZeroWeightsGiveBias) {
  Tape tape;
  const Var y = linear(tape.constant(Tensor({2, 3}, 0.0)), tape.constant(Tensor::vector({1, 1})),
                       tape.constant(Tensor::vector({5, -2, 9})));
  EXPECT_EQ(y.value(), Tensor::vector({1, 1}));
}

TEST(LinearTest, MatchesTripleLoop) {
  std::mt19937_64 rng(7);
  const Tensor w = random_tensor({3, 3}, rng);
  const Tensor b = random_tensor({3}, rng);
  const Tensor x = random_tensor({3}, rng);
  Tape tape;
  const Var y = linear(tape.constant(w), tape.constant(b), tape.constant(x));
  for (std::size_t i = 0; i < 3; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < 3; ++j) acc += w.at(i, j) * x[j];
    EXPECT_NEAR(y.value()[i], acc, 1e-15);
  }
}

TEST(LinearTest, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(linear(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2})),
                      tape.constant(Tensor({4}))),
               ShapeError);
  EXPECT_THROW(linear(tape.constant(Tensor({2, 3})), tape.constant(Tensor({3})),
                      tape.constant(Tensor({3}))),
               ShapeError);
}

TEST(ReluTest, Forward) {
  Tape tape;
  EXPECT_EQ(relu(tape.constant(Tensor::vector({-1, 0, 2}))).value(), Tensor::vector({0, 0, 2}));
}

TEST(ReluTest, AllNegativeGivesZeroOutputAndGradient) {
  Tape tape;
  const Var x = tape.leaf(Tensor::vector({-3, -0.5, -1e-9}));
  const Var y = relu(x);
  EXPECT_EQ(y.value(), Tensor::vector({0, 0, 0}));
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(x), Tensor::vector({0, 0, 0}));
}

TEST(ReluTest, GradientIsIndicator) {
  Tape tape;
  const Var x = tape.leaf(Tensor::vector({0.5, -0.5, 0.0}));
  tape.backward(sum(relu(x)));
  EXPECT_EQ(tape.grad(x), Tensor::vector({1, 0, 0}));
}

TEST(LstmTest, ZeroParametersZeroCell) {
  Tape tape;
  const auto out = lstm_step(tape.constant(Tensor({8, 5})), tape.constant(Tensor({8})),
                             tape.constant(Tensor::vector({1, -2, 3})),
                             tape.constant(Tensor::vector({0.3, -0.4})),
                             tape.constant(Tensor::vector({0, 0})));
  EXPECT_EQ(out.hidden.value(), Tensor::vector({0, 0}));
  EXPECT_EQ(out.cell.value(), Tensor::vector({0, 0}));
}

TEST(LstmTest, ZeroParametersHalveCell) {
  Tape tape;
  const auto out = lstm_step(tape.constant(Tensor({8, 4})), tape.constant(Tensor({8})),
                             tape.constant(Tensor::vector({1, 1})),
                             tape.constant(Tensor::vector({0, 0})),
                             tape.constant(Tensor::vector({2.0, -0.6})));
  EXPECT_DOUBLE_EQ(out.cell.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(out.cell.value()[1], -0.3);
}

TEST(LstmTest, MatchesScalarGateEquations) {
  std::mt19937_64 rng(21);
  const std::size_t d = 3;
  const std::size_t u = 2;
  const Tensor w = random_tensor({4 * u, d + u}, rng);
  const Tensor b = random_tensor({4 * u}, rng);
  const Tensor x = random_tensor({d}, rng);
  const Tensor h = random_tensor({u}, rng);
  const Tensor c = random_tensor({u}, rng);
  Tape tape;
  const auto out = lstm_step(tape.constant(w), tape.constant(b), tape.constant(x),
                             tape.constant(h), tape.constant(c));
  for (std::size_t k = 0; k < u; ++k) {
    double z[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t row = g * u + k;
      z[g] = b[row];
      for (std::size_t j = 0; j < d; ++j) z[g] += w.at(row, j) * x[j];
      for (std::size_t j = 0; j < u; ++j) z[g] += w.at(row, d + j) * h[j];
    }
    const double cell = sigmoid_ref(z[1]) * c[k] + sigmoid_ref(z[0]) * std::tanh(z[2]);
    EXPECT_NEAR(out.cell.value()[k], cell, 1e-14);
    EXPECT_NEAR(out.hidden.value()[k], sigmoid_ref(z[3]) * std::tanh(cell), 1e-14);
  }
}

TEST(LstmTest, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(lstm_step(tape.constant(Tensor({8, 4})), tape.constant(Tensor({8})),
                         tape.constant(Tensor({3})), tape.constant(Tensor({2})),
                         tape.constant(Tensor({2}))),
               ShapeError);
}

TEST(LstmTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  const std::size_t d = 4;
  const std::size_t u = 4;
  const ScalarFunction fn = [](Tape& tape, std::span<const Var> in) {
    return sum(lstm_step(in[0], in[1], in[2], in[3], in[4]).hidden);
  };
  const auto result = grad_check(fn, {random_tensor({4 * u, d + u}, rng), random_tensor({4 * u}, rng),
                                      random_tensor({d}, rng), random_tensor({u}, rng),
                                      random_tensor({u}, rng)});
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(SoftmaxTest, EqualLogitsAreUniform) {
  Tape tape;
  const Var p = softmax(tape.constant(Tensor::vector({2, 2, 2, 2})));
  for (double v : p.value().storage()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(SoftmaxTest, ClosedForm) {
  Tape tape;
  const Var p = softmax(tape.constant(Tensor::vector({0, std::log(3.0)})));
  EXPECT_NEAR(p.value()[0], 0.25, 1e-15);
  EXPECT_NEAR(p.value()[1], 0.75, 1e-15);
}

TEST(SoftmaxTest, SumsToOneAndShiftInvariant) {
  std::mt19937_64 rng(5);
  for (double shift : {1.0, 100.0, 1e3, -1e3}) {
    const Tensor x = random_tensor({7}, rng, -5.0, 5.0);
    Tensor shifted = x;
    for (double& v : shifted.storage()) v += shift;
    Tape tape;
    const Var a = softmax(tape.constant(x));
    const Var b = softmax(tape.constant(shifted));
    double total = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      total += a.value()[i];
      EXPECT_NEAR(a.value()[i], b.value()[i], 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(SoftmaxTest, LogSoftmaxAgrees) {
  Tape tape;
  const Var x = tape.constant(Tensor::vector({0.3, -1.2, 2.5}));
  const Var p = softmax(x);
  const Var lp = log_softmax(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(std::exp(lp.value()[i]), p.value()[i], 1e-15);
}

TEST(BackwardTest, Square) {
  Tape tape;
  const Var x = tape.leaf(Tensor::scalar(3.0));
  tape.backward(square(x));
  EXPECT_DOUBLE_EQ(tape.grad(x)[0], 6.0);
}

TEST(BackwardTest, DisconnectedParameterGetsExactZero) {
  Parameter used("used", Tensor::vector({1.0, 2.0}));
  Parameter unused("unused", Tensor::vector({3.0, 4.0}));
  Tape tape;
  const Var a = tape.param(used);
  tape.param(unused);
  tape.backward(sum(square(a)));
  EXPECT_EQ(used.grad, Tensor::vector({2.0, 4.0}));
  EXPECT_EQ(unused.grad, Tensor::vector({0.0, 0.0}));
}

TEST(BackwardTest, NonScalarOutputThrows) {
  Tape tape;
  const Var x = tape.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(BackwardTest, ParameterGradientsAccumulate) {
  Parameter p("p", Tensor::scalar(2.0));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(square(tape.param(p)));
  }
  EXPECT_DOUBLE_EQ(p.grad[0], 8.0);
}

TEST(BackwardTest, ComposedNetworkMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  const ScalarFunction fn = [](Tape&, std::span<const Var> in) {
    const Var hidden = relu(linear(in[0], in[1], in[4]));
    return sum(linear(in[2], in[3], hidden));
  };
  // Biases pushed positive so no hidden unit sits at the relu kink.
  Tensor b1 = random_tensor({5}, rng, 0.5, 1.0);
  const auto result = grad_check(fn, {random_tensor({5, 3}, rng, -0.2, 0.2), b1,
                                      random_tensor({2, 5}, rng), random_tensor({2}, rng),
                                      random_tensor({3}, rng)});
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(BackwardTest, VisitsEachNodeOnce) {
  std::mt19937_64 rng(3);
  Tape tape;
  const Var x = tape.leaf(random_tensor({4}, rng));
  const Var w = tape.leaf(random_tensor({3, 4}, rng));
  const Var b = tape.leaf(random_tensor({3}, rng));
  const Var y = sum(tanh(linear(w, b, x)) * sigmoid(linear(w, b, x)));
  tape.backward(y);
  EXPECT_EQ(tape.backward_visits(), tape.size());
  tape.backward(y);
  EXPECT_EQ(tape.backward_visits(), tape.size());
}

TEST(BackwardTest, DeterministicAcrossRepeats) {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tape tape;
    const Var x = tape.leaf(random_tensor({6}, rng));
    const Var w = tape.leaf(random_tensor({4, 6}, rng));
    const Var y = sum(log_softmax(matvec(w, x)) * 0.3) + dot(x, x);
    tape.backward(y);
    return std::vector<Tensor>{y.value(), tape.grad(x), tape.grad(w)};
  };
  EXPECT_EQ(run(), run());
}

TEST(StopGradientTest, BlocksFlow) {
  Tape tape;
  const Var x = tape.leaf(Tensor::scalar(2.0));
  tape.backward(x * stop_gradient(x));
  EXPECT_DOUBLE_EQ(tape.grad(x)[0], 2.0);
}

TEST(GradCheckTest, QuadraticForm) {
  std::mt19937_64 rng(17);
  const Tensor a = random_tensor({4, 4}, rng);
  const ScalarFunction fn = [&a](Tape& tape, std::span<const Var> in) {
    return dot(in[0], matvec(tape.constant(a), in[0]));
  };
  EXPECT_LT(grad_check(fn, {random_tensor({4}, rng)}).max_relative_error, 1e-7);
}

TEST(GradCheckTest, SoftmaxCrossEntropy) {
  std::mt19937_64 rng(19);
  const ScalarFunction fn = [](Tape&, std::span<const Var> in) {
    return -pick(log_softmax(in[0]), 2);
  };
  EXPECT_LT(grad_check(fn, {random_tensor({5}, rng)}).max_relative_error, 1e-6);
}

TEST(GradCheckTest, NonFiniteThrows) {
  const ScalarFunction fn = [](Tape&, std::span<const Var> in) { return sum(log(in[0])); };
  EXPECT_THROW(grad_check(fn, {Tensor::vector({-1.0, 2.0})}), NonFiniteError);
}

TEST(GradCheckTest, DistributionHeads) {
  std::mt19937_64 rng(23);
  const Tensor sample = random_tensor({3}, rng);
  const ScalarFunction fn = [&sample](Tape&, std::span<const Var> in) {
    return gaussian_log_prob(in[0], in[1], sample) + gaussian_entropy(in[1]) +
           categorical_entropy(log_softmax(in[2]));
  };
  const auto result =
      grad_check(fn, {random_tensor({3}, rng), random_tensor({3}, rng, -1.0, 0.0), random_tensor({4}, rng)});
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(DistributionTest, GaussianLogProbMatchesDensity) {
  Tape tape;
  const double mu = 0.4;
  const double log_std = -0.3;
  const double x = 1.1;
  const Var lp = gaussian_log_prob(tape.constant(Tensor::vector({mu})),
                                   tape.constant(Tensor::vector({log_std})), Tensor::vector({x}));
  const double s = std::exp(log_std);
  const double density = std::exp(-0.5 * (x - mu) * (x - mu) / (s * s)) / (s * std::sqrt(2.0 * M_PI));
  EXPECT_NEAR(lp.item(), std::log(density), 1e-13);
}

TEST(DistributionTest, UniformCategoricalEntropy) {
  Tape tape;
  const Var h = categorical_entropy(log_softmax(tape.constant(Tensor({6}, 0.0))));
  EXPECT_NEAR(h.item(), std::log(6.0), 1e-14);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  for (double g : {0.001, 3.0, -42.0}) {
    Tensor p = Tensor::vector({1.0});
    auto state = AdamState::for_shape(p, 0.01);
    adam_step(p, Tensor::vector({g}), state);
    EXPECT_NEAR(p[0], 1.0 - 0.01 * (g > 0 ? 1.0 : -1.0), 1e-6);
    EXPECT_EQ(state.step_count, 1u);
  }
}

TEST(AdamTest, ZeroGradientLeavesParameterAndDecaysMoments) {
  Tensor p = Tensor::vector({1.0});
  auto state = AdamState::for_shape(p, 0.1);
  adam_step(p, Tensor::vector({2.0}), state);
  const Tensor after_first = p;
  const double m = state.first_moment[0];
  const double v = state.second_moment[0];
  Tensor q = Tensor::vector({5.0});
  auto fresh = AdamState::for_shape(q, 0.1);
  adam_step(q, Tensor::vector({0.0}), fresh);
  EXPECT_DOUBLE_EQ(q[0], 5.0);
  adam_step(p, Tensor::vector({0.0}), state);
  EXPECT_DOUBLE_EQ(state.first_moment[0], 0.9 * m);
  EXPECT_DOUBLE_EQ(state.second_moment[0], 0.999 * v);
  EXPECT_NE(p[0], after_first[0]);
}

TEST(AdamTest, QuadraticDecreasesTwice) {
  Tensor x = Tensor::vector({1.0});
  auto state = AdamState::for_shape(x, 0.1);
  double previous = x[0];
  for (int i = 0; i < 2; ++i) {
    adam_step(x, Tensor::vector({2.0 * x[0]}), state);
    EXPECT_LT(x[0], previous);
    previous = x[0];
  }
}

TEST(AdamTest, RejectsNonFiniteAndMismatchedGradients) {
  Tensor p = Tensor::vector({1.0, 2.0});
  auto state = AdamState::for_shape(p, 0.1);
  EXPECT_THROW(adam_step(p, Tensor::vector({NAN, 0.0}), state), NonFiniteError);
  EXPECT_THROW(adam_step(p, Tensor::vector({1.0}), state), ShapeError);
}

}  // namespace
}  // namespace uavnet::ad
