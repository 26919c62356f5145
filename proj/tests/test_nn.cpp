#include <gtest/gtest.h>

#include <cmath>

#include "smgen/nn.hpp"
#include "smgen/rng.hpp"

using namespace smgen;
using nn::Tensor;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.v) v = rng.normal();
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * b.v[i];
  return acc;
}

}  // namespace

TEST(Conv2d, OnesKernelSumsWindow) {
  Tensor x({1, 3, 3});
  for (auto& v : x.v) v = 1.0;
  Tensor w({1, 1, 3, 3});
  for (auto& v : w.v) v = 1.0;
  Tensor b({1});
  const auto y = nn::conv2d(x, w, b, 1, 0);
  ASSERT_EQ(y.v.size(), 1u);
  EXPECT_DOUBLE_EQ(y.v[0], 9.0);
}

TEST(Conv2d, IdentityKernelWithSamePadding) {
  Rng rng(1);
  const auto x = random_tensor({2, 5, 7}, rng);
  Tensor w({2, 2, 3, 3});
  w.v[(0 * 2 + 0) * 9 + 4] = 1.0;  // center tap, channel 0 -> 0
  w.v[(1 * 2 + 1) * 9 + 4] = 1.0;  // center tap, channel 1 -> 1
  Tensor b({2});
  const auto y = nn::conv2d(x, w, b, 1, 1);
  ASSERT_EQ(y.shape, x.shape);
  for (std::size_t i = 0; i < x.v.size(); ++i) ASSERT_EQ(y.v[i], x.v[i]);
}

TEST(Conv2d, ShapeLawAndErrors) {
  Rng rng(2);
  const auto x = random_tensor({2, 3, 5, 5}, rng);
  Tensor w({4, 3, 3, 3});
  Tensor b({4});
  const auto y = nn::conv2d(x, w, b, 2, 1);
  const std::vector<std::size_t> want{2, 4, 3, 3};  // (5+2-3)/2+1
  EXPECT_EQ(y.shape, want);
  Tensor bad_w({4, 2, 3, 3});
  EXPECT_THROW(nn::conv2d(x, bad_w, b), ShapeError);
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const auto x0 = random_tensor({2, 3, 5, 5}, rng);
  Tensor w0 = random_tensor({2, 3, 3, 3}, rng);
  Tensor b0 = random_tensor({2}, rng);
  const auto probe = random_tensor({2, 2, 5, 5}, rng);  // pad 1, stride 1

  auto loss_of_x = [&](const std::vector<double>& flat) {
    Tensor x = x0;
    x.v = flat;
    Tensor w = w0, b = b0;
    return dot(nn::conv2d(x, w, b, 1, 1), probe);
  };
  Tensor w = w0, b = b0;
  const auto dx = nn::conv2d_backward(x0, w, b, probe, 1, 1);
  EXPECT_LT(nn::grad_check(loss_of_x, x0.v, dx.v), 1e-4);

  auto loss_of_w = [&](const std::vector<double>& flat) {
    Tensor wt = w0;
    wt.v = flat;
    Tensor bt = b0;
    return dot(nn::conv2d(x0, wt, bt, 1, 1), probe);
  };
  EXPECT_LT(nn::grad_check(loss_of_w, w0.v, w.g), 1e-4);
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  Tensor wt = w0;
                  Tensor bt = b0;
                  bt.v = flat;
                  return dot(nn::conv2d(x0, wt, bt, 1, 1), probe);
                },
                b0.v, b.g),
            1e-4);
}

TEST(ConvTranspose2d, ZerosInZerosOut) {
  Tensor x({2, 3, 3});
  Tensor w({2, 3, 3, 3});
  Tensor b({3});
  const auto y = nn::conv_transpose2d(x, w, b, 2, 1, 1, 1);
  for (double v : y.v) EXPECT_EQ(v, 0.0);
}

TEST(ConvTranspose2d, AdjointIdentityWithConv2d) {
  Rng rng(5);
  for (const std::size_t stride : {1u, 2u}) {
    const auto x = random_tensor({3, 6, 7}, rng);
    Tensor w = random_tensor({4, 3, 3, 3}, rng);
    Tensor zero_b4({4}), zero_b3({3});
    const auto cx = nn::conv2d(x, w, zero_b4, stride, 1);
    const auto y = random_tensor(cx.shape, rng);
    // Transposed kernel maps y's 4 channels back to x's 3; output padding
    // chosen to land exactly on x's spatial shape.
    Tensor wt({4, 3, 3, 3});
    wt.v = w.v;
    const std::size_t oph = x.shape[1] - ((cx.shape[1] - 1) * stride + 3 - 2);
    const std::size_t opw = x.shape[2] - ((cx.shape[2] - 1) * stride + 3 - 2);
    const auto ty = nn::conv_transpose2d(y, wt, zero_b3, stride, 1, oph, opw);
    ASSERT_EQ(ty.shape, x.shape);
    const double lhs = dot(cx, y);
    const double rhs = dot(x, ty);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)))
        << "stride " << stride;
  }
}

TEST(ConvTranspose2d, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const auto x0 = random_tensor({3, 4, 5}, rng);
  Tensor w0 = random_tensor({3, 2, 3, 3}, rng);
  Tensor b0 = random_tensor({2}, rng);
  Tensor w = w0, b = b0;
  const auto y = nn::conv_transpose2d(x0, w0, b0, 2, 1, 1, 1);
  const auto probe = random_tensor(y.shape, rng);
  const auto dx = nn::conv_transpose2d_backward(x0, w, b, probe, 2, 1);
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  Tensor x = x0;
                  x.v = flat;
                  Tensor wt = w0, bt = b0;
                  return dot(nn::conv_transpose2d(x, wt, bt, 2, 1, 1, 1), probe);
                },
                x0.v, dx.v),
            1e-4);
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  Tensor wt = w0;
                  wt.v = flat;
                  Tensor bt = b0;
                  return dot(nn::conv_transpose2d(x0, wt, bt, 2, 1, 1, 1), probe);
                },
                w0.v, w.g),
            1e-4);
}

TEST(Linear, ForwardAndGradient) {
  Rng rng(9);
  const auto x0 = random_tensor({4, 3}, rng);
  Tensor w0 = random_tensor({3, 5}, rng);
  Tensor b0 = random_tensor({5}, rng);
  const auto probe = random_tensor({4, 5}, rng);
  Tensor w = w0, b = b0;
  const auto dx = nn::linear_backward(x0, w, b, probe);
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  Tensor x = x0;
                  x.v = flat;
                  return dot(nn::linear(x, w0, b0), probe);
                },
                x0.v, dx.v),
            1e-10);  // linear map: exact up to fd truncation
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  Tensor wt = w0;
                  wt.v = flat;
                  return dot(nn::linear(x0, wt, b0), probe);
                },
                w0.v, w.g),
            1e-10);
}

TEST(Activations, ClosedFormsAndGradients) {
  EXPECT_DOUBLE_EQ(nn::leaky_relu(2.0), 2.0);
  EXPECT_DOUBLE_EQ(nn::leaky_relu(-2.0), -0.02);
  EXPECT_DOUBLE_EQ(nn::sigmoid(0.0), 0.5);
  EXPECT_DOUBLE_EQ(nn::sigmoid_grad_from_y(nn::sigmoid(0.0)), 0.25);
  EXPECT_NEAR(nn::gelu(0.0), 0.0, 1e-15);
  EXPECT_NEAR(nn::gelu_grad(0.0), 0.5, 1e-12);

  // Finite differences on each scalar activation.
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const double x = rng.normal() * 2.0;
    const double h = 1e-5;
    const double fd_gelu = (nn::gelu(x + h) - nn::gelu(x - h)) / (2 * h);
    EXPECT_NEAR(nn::gelu_grad(x), fd_gelu, 1e-8);
    const double fd_sig =
        (nn::sigmoid(x + h) - nn::sigmoid(x - h)) / (2 * h);
    EXPECT_NEAR(nn::sigmoid_grad_from_y(nn::sigmoid(x)), fd_sig, 1e-8);
    if (std::abs(x) > 1e-3) {
      const double fd_lr =
          (nn::leaky_relu(x + h) - nn::leaky_relu(x - h)) / (2 * h);
      EXPECT_NEAR(nn::leaky_relu_grad(x), fd_lr, 1e-8);
    }
  }
}

TEST(Softmax, ProbabilityVectorAndShiftInvariance) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.normal() * 3.0;
    const auto y = nn::softmax(x);
    double sum = 0.0;
    for (double v : y) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto shifted = x;
    for (auto& v : shifted) v += 17.25;
    const auto ys = nn::softmax(shifted);
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(ys[i], y[i], 1e-12);
  }
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
  Rng rng(15);
  std::vector<double> x(5), probe(5);
  for (auto& v : x) v = rng.normal();
  for (auto& v : probe) v = rng.normal();
  const auto y = nn::softmax(x);
  const auto dx = nn::softmax_backward(y, probe);
  EXPECT_LT(nn::grad_check(
                [&](const std::vector<double>& flat) {
                  const auto yy = nn::softmax(flat);
                  double acc = 0.0;
                  for (std::size_t i = 0; i < yy.size(); ++i)
                    acc += yy[i] * probe[i];
                  return acc;
                },
                x, dx),
            1e-6);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Tensor p({3});
  p.v = {1.0, -2.0, 3.0};
  p.ensure_grad();
  std::vector<Tensor*> params{&p};
  nn::AdamState st;
  nn::adam_step(params, st);
  EXPECT_DOUBLE_EQ(p.v[0], 1.0);
  EXPECT_DOUBLE_EQ(p.v[1], -2.0);
  EXPECT_DOUBLE_EQ(p.v[2], 3.0);
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
  Tensor p({1});
  p.v = {0.5};
  p.ensure_grad();
  p.g = {3.7};  // constant gradient
  std::vector<Tensor*> params{&p};
  nn::AdamState st;
  st.lr = 0.01;
  nn::adam_step(params, st);
  // Bias-corrected first step: lr * g / (|g| + eps) ~ lr * sign(g).
  EXPECT_NEAR(p.v[0], 0.5 - 0.01, 1e-6);
}

TEST(Adam, DeterministicTrajectories) {
  auto run = [] {
    Rng rng(77);
    Tensor p({4});
    for (auto& v : p.v) v = rng.normal();
    std::vector<Tensor*> params{&p};
    nn::AdamState st;
    for (int step = 0; step < 25; ++step) {
      p.ensure_grad();
      for (std::size_t i = 0; i < p.v.size(); ++i)
        p.g[i] = 2.0 * p.v[i] + std::sin(static_cast<double>(step));
      nn::adam_step(params, st);
      p.zero_grad();
    }
    return p.v;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
}

TEST(GradCheck, ExactOnLinearFunction) {
  std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> w{0.5, -1.5, 2.5};
  const auto err = nn::grad_check(
      [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * v[i];
        return acc;
      },
      x, w);
  EXPECT_LT(err, 1e-10);
}
