#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "core/gradcheck.hpp"
#include "core/layers.hpp"

using namespace peakgen;

namespace {

Tensor make(std::vector<int> shape, std::vector<double> values) {
  Tensor t(std::move(shape));
  t.data = std::move(values);
  return t;
}

}  // namespace

TEST_CASE("linear forward matches the worked example") {
  // x = [1, 2], W = [[1, 0], [0, 1]] stretched: use W = [[2], [2]], b = [0]
  // -> y = 1*2 + 2*2 = 6
  Linear lin;
  Rng rng(0);
  lin.init(2, 1, rng);
  lin.W.data = {2.0, 2.0};
  lin.b.data = {0.0};
  Tensor y = lin.forward(make({1, 2}, {1.0, 2.0}));
  CHECK(y.size() == 1);
  CHECK(y.at(0, 0) == 6.0);

  lin.b.data = {-1.5};
  CHECK(lin.forward(make({1, 2}, {1.0, 2.0})).at(0, 0) == 4.5);
}

TEST_CASE("linear handles batched rows") {
  Linear lin;
  Rng rng(1);
  lin.init(3, 2, rng);
  Tensor x = make({2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor y = lin.forward(x);
  CHECK(y.dim(0) == 2);
  CHECK(y.dim(1) == 2);
  // row i of x selects row i of W (plus bias)
  CHECK(y.at(0, 0) == doctest::Approx(lin.W.at(0, 0) + lin.b.at(0)));
  CHECK(y.at(1, 1) == doctest::Approx(lin.W.at(1, 1) + lin.b.at(1)));
}

TEST_CASE("linear gradients agree with finite differences") {
  Rng rng(2);
  Linear lin;
  lin.init(4, 3, rng);
  Tensor x({2, 4});
  x.init_normal(rng, 0.0, 1.0);

  auto loss = [&](bool with_grad) {
    Tensor y = lin.forward(x);
    double l = 0.0;
    for (size_t i = 0; i < y.size(); ++i) l += 0.5 * y.data[i] * y.data[i];
    if (with_grad) {
      Tensor dy = y;
      dy.data = y.data;  // dL/dy = y
      lin.backward(dy);
    }
    return l;
  };
  std::vector<Tensor*> params;
  lin.collect_params(params);
  Rng pick(3);
  auto res = grad_check(params, loss, 1e-5, 50, pick);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("conv1d matches the worked example") {
  // x = [1, 2, 3], kernel = [1, 0, -1], no padding, stride 1
  // -> y = [1*1 + 2*0 + 3*(-1)] = [-2]
  Conv1d conv;
  Rng rng(0);
  conv.init(1, 1, 3, /*pad=*/0, /*str=*/1, rng);
  conv.kernels.data = {1.0, 0.0, -1.0};
  conv.bias.data = {0.0};
  Tensor y = conv.forward(make({1, 3}, {1, 2, 3}));
  CHECK(y.dim(1) == 1);
  CHECK(y.at(0, 0) == -2.0);

  // same kernel on [1,2,3,4,5]: windows give [-2,-2,-2]... and with padding 1
  // the edges see zeros: [0,1,2],[1,2,3],...,[4,5,0] -> [-2,-2,-2,-2,4]
  Conv1d padded;
  padded.init(1, 1, 3, /*pad=*/1, /*str=*/1, rng);
  padded.kernels.data = {1.0, 0.0, -1.0};
  padded.bias.data = {0.0};
  Tensor y2 = padded.forward(make({1, 5}, {1, 2, 3, 4, 5}));
  REQUIRE(y2.dim(1) == 5);
  CHECK(y2.at(0, 0) == -2.0);
  CHECK(y2.at(0, 1) == -2.0);
  CHECK(y2.at(0, 2) == -2.0);
  CHECK(y2.at(0, 3) == -2.0);
  CHECK(y2.at(0, 4) == 4.0);
}

TEST_CASE("conv1d output length for stride and padding") {
  CHECK(Conv1d::out_len(10, 3, 0, 1) == 8);
  CHECK(Conv1d::out_len(10, 3, 1, 1) == 10);
  CHECK(Conv1d::out_len(10, 7, 3, 2) == 5);
  CHECK(Conv1d::out_len(512, 7, 3, 2) == 256);
}

TEST_CASE("conv1d gradients over channels, stride and padding") {
  Rng rng(4);
  Conv1d conv;
  conv.init(2, 3, 5, /*pad=*/2, /*str=*/2, rng);
  Tensor x({2, 16});
  x.init_normal(rng, 0.0, 1.0);
  auto loss = [&](bool with_grad) {
    Tensor y = conv.forward(x);
    double l = 0.0;
    for (size_t i = 0; i < y.size(); ++i) l += 0.5 * y.data[i] * y.data[i];
    if (with_grad) {
      Tensor dy = y;
      conv.backward(dy);
    }
    return l;
  };
  std::vector<Tensor*> params;
  conv.collect_params(params);
  Rng pick(5);
  auto res = grad_check(params, loss, 1e-5, 60, pick);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("softmax rows sum to one and order preserves") {
  Tensor x = make({2, 3}, {1.0, 2.0, 3.0, -5.0, 0.0, 5.0});
  Tensor y = softmax_rows(x);
  for (int i = 0; i < 2; ++i) {
    double s = y.at(i, 0) + y.at(i, 1) + y.at(i, 2);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.at(i, 0) < y.at(i, 1));
    CHECK(y.at(i, 1) < y.at(i, 2));
  }
  // invariance under a constant shift
  Tensor xs = make({1, 3}, {1001.0, 1002.0, 1003.0});
  Tensor ys = softmax_rows(xs);
  CHECK(ys.at(0, 0) == doctest::Approx(y.at(0, 0)).epsilon(1e-12));
}

TEST_CASE("softmax backward matches finite differences") {
  Rng rng(6);
  Tensor x({3, 4});
  x.init_normal(rng, 0.0, 2.0);
  Tensor w({3, 4});
  w.init_normal(rng, 0.0, 1.0);  // fixed weights to make a scalar loss

  // loss = sum w .* softmax(x); check d/dx numerically
  Tensor y = softmax_rows(x);
  Tensor dy = w;
  Tensor dx = softmax_rows_backward(y, dy);
  const double eps = 1e-6;
  for (size_t i = 0; i < x.size(); ++i) {
    double orig = x.data[i];
    x.data[i] = orig + eps;
    Tensor yp = softmax_rows(x);
    x.data[i] = orig - eps;
    Tensor ym = softmax_rows(x);
    x.data[i] = orig;
    double lp = 0.0, lm = 0.0;
    for (size_t j = 0; j < yp.size(); ++j) {
      lp += w.data[j] * yp.data[j];
      lm += w.data[j] * ym.data[j];
    }
    double fd = (lp - lm) / (2 * eps);
    CHECK(dx.data[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("relu clamps and masks gradients") {
  Relu relu;
  Tensor y = relu.forward(make({1, 4}, {-1.0, 0.0, 2.0, -0.5}));
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0, 0.0});
  Tensor dx = relu.backward(make({1, 4}, {1.0, 1.0, 1.0, 1.0}));
  CHECK(dx.data == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

TEST_CASE("sigmoid values and derivative identity") {
  Sigmoid sig;
  Tensor y = sig.forward(make({1, 3}, {0.0, 2.0, -2.0}));
  CHECK(y.at(0, 0) == doctest::Approx(0.5));
  CHECK(y.at(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(y.at(0, 1) + y.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  Tensor dx = sig.backward(make({1, 3}, {1.0, 1.0, 1.0}));
  for (int j = 0; j < 3; ++j)
    CHECK(dx.at(0, j) ==
          doctest::Approx(y.at(0, j) * (1.0 - y.at(0, j))).epsilon(1e-12));
}

TEST_CASE("dropout keeps expectation and is identity at inference") {
  Rng rng(7);
  Dropout drop;
  drop.p = 0.3;
  Tensor x({1, 10000});
  x.fill(1.0);
  Tensor y = drop.forward(x, /*training=*/true, rng);
  double mean = 0.0;
  int zeros = 0;
  for (double v : y.data) {
    mean += v;
    zeros += v == 0.0;
  }
  mean /= y.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));  // inverted scaling
  CHECK(zeros / 10000.0 == doctest::Approx(0.3).epsilon(0.07));

  Tensor yi = drop.forward(x, /*training=*/false, rng);
  CHECK(yi.data == x.data);

  // backward zeroes exactly where forward did
  Tensor dy({1, 10000});
  dy.fill(1.0);
  drop.forward(x, true, rng);
  Tensor dx = drop.backward(dy);
  for (size_t i = 0; i < dx.size(); ++i) {
    if (drop.mask[i] == 0) CHECK(dx.data[i] == 0.0);
  }
}

TEST_CASE("attention output shape and row-stochastic weights") {
  Rng rng(8);
  MultiHeadAttention mha;
  mha.init(8, 2, rng);
  Tensor x({5, 8});
  x.init_normal(rng, 0.0, 1.0);
  Tensor y = mha.forward_self(x);
  CHECK(y.dim(0) == 5);
  CHECK(y.dim(1) == 8);
  REQUIRE(mha.attn.shape == std::vector<int>{2, 5, 5});
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 5; ++i) {
      double s = 0.0;
      for (int j = 0; j < 5; ++j) s += mha.attn.at(h, i, j);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("attention gradients agree with finite differences") {
  Rng rng(9);
  MultiHeadAttention mha;
  mha.init(6, 3, rng);
  Tensor x({4, 6});
  x.init_normal(rng, 0.0, 1.0);
  Tensor w({4, 6});
  w.init_normal(rng, 0.0, 1.0);

  auto loss = [&](bool with_grad) {
    Tensor y = mha.forward_self(x);
    double l = 0.0;
    for (size_t i = 0; i < y.size(); ++i) l += w.data[i] * y.data[i];
    if (with_grad) mha.backward_self(w);
    return l;
  };
  std::vector<Tensor*> params;
  mha.collect_params(params);
  Rng pick(10);
  auto res = grad_check(params, loss, 1e-5, 60, pick);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("attention input gradient via backward_self") {
  Rng rng(11);
  MultiHeadAttention mha;
  mha.init(4, 2, rng);
  Tensor x({3, 4});
  x.init_normal(rng, 0.0, 1.0);
  Tensor w({3, 4});
  w.init_normal(rng, 0.0, 1.0);

  Tensor y = mha.forward_self(x);
  (void)y;
  Tensor dx = mha.backward_self(w);
  const double eps = 1e-6;
  for (size_t i = 0; i < x.size(); ++i) {
    double orig = x.data[i];
    x.data[i] = orig + eps;
    Tensor yp = mha.forward_self(x);
    x.data[i] = orig - eps;
    Tensor ym = mha.forward_self(x);
    x.data[i] = orig;
    double lp = 0.0, lm = 0.0;
    for (size_t j = 0; j < yp.size(); ++j) {
      lp += w.data[j] * yp.data[j];
      lm += w.data[j] * ym.data[j];
    }
    double fd = (lp - lm) / (2 * eps);
    CHECK(dx.data[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("adam minimizes a quadratic bowl") {
  // f(p) = sum (p - target)^2 from a poor start. Adam moves roughly lr per
  // step far from the optimum, so give it ample budget for the 5.0 gap.
  Tensor p({5});
  p.data = {4.0, -3.0, 2.5, -1.0, 5.0};
  std::vector<double> target = {1.0, 0.5, -0.5, 2.0, 0.0};
  std::vector<Tensor*> params = {&p};
  Adam opt(1e-2);
  for (int step = 0; step < 2000; ++step) {
    p.zero_grad();
    for (int i = 0; i < 5; ++i) p.grad[i] = 2.0 * (p.data[i] - target[i]);
    opt.step(params);
  }
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    worst = std::max(worst, std::abs(p.data[i] - target[i]));
  CHECK(worst < 1e-3);
}

TEST_CASE("adam step count and reset") {
  Tensor p({2});
  p.data = {1.0, 1.0};
  std::vector<Tensor*> params = {&p};
  Adam opt(1e-3);
  p.grad = {1.0, 1.0};
  opt.step(params);
  CHECK(opt.step_count == 1);
  // first Adam step moves by about lr regardless of gradient scale
  CHECK(p.data[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  opt.reset();
  CHECK(opt.step_count == 0);
  CHECK(opt.m.empty());
}
