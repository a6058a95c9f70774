#include <cmath>

#include "doctest.h"
#include "ipcae/autodiff.hpp"
#include "ipcae/errors.hpp"

using namespace ipcae;

TEST_CASE("softmax of uniform logits is uniform") {
  Tape tape;
  Var x = tape.constant(Tensor::from({3}, {0.7, 0.7, 0.7}));
  const Tensor& y = tape.value(tape.softmax(x, 1));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(y.at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("leaky_relu definition") {
  Tape tape;
  Var x = tape.constant(Tensor::from({2}, {-1.0, 3.0}));
  const Tensor& y = tape.value(tape.leaky_relu(x, 0.2));
  CHECK(y.at(0) == -0.2);
  CHECK(y.at(1) == 3.0);
}

TEST_CASE("logsumexp shifts away overflow") {
  Tape tape;
  Var x = tape.constant(Tensor::from({1, 2}, {1000.0, 1000.0}));
  const Tensor& y = tape.value(tape.logsumexp(x, 1));
  CHECK(y.at(0) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("backward of sum is all-ones") {
  Tape tape;
  Var x = tape.leaf(Tensor::from({3}, {2.0, -1.0, 5.0}), true);
  tape.backward(tape.sum(x));
  const Tensor& g = tape.grad(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.at(i) == 1.0);
}

TEST_CASE("backward of x.x is 2x") {
  Tape tape;
  Var x = tape.leaf(Tensor::from({3}, {1.5, -2.0, 0.5}), true);
  tape.backward(tape.sum(tape.mul(x, x)));
  const Tensor& g = tape.grad(x);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(g.at(i) == doctest::Approx(2.0 * tape.value(x).at(i)).epsilon(1e-14));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Var x = tape.leaf(Tensor::from({2}, {1.0, 2.0}), true);
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("grad_check is exact for a linear function") {
  Rng rng(21);
  const std::vector<Tensor> params{Tensor::uniform(rng, {4}, -1, 1)};
  const Tensor c = Tensor::uniform(rng, {4}, -1, 1);
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        return t.sum(t.mul(vs[0], t.constant(c)));
      },
      params);
  CHECK(err < 1e-9);
}

TEST_CASE("grad_check on a softmax cross-entropy toy") {
  Rng rng(22);
  const std::vector<Tensor> params{Tensor::uniform(rng, {2, 5}, -0.5, 0.5)};
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        Var lse = t.logsumexp(vs[0], 1);
        Tensor pick = Tensor::zeros({2, 5});
        pick.at(0, 3) = 1.0;
        pick.at(1, 1) = 1.0;
        Var hit = t.sum_axis(t.mul(vs[0], t.constant(pick)), 1);
        return t.mean(t.sub(lse, hit));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check on a two-layer MLP with every op in the path") {
  Rng rng(23);
  std::vector<Tensor> params{
      Tensor::uniform(rng, {3, 6}, -0.7, 0.7),  // w1
      Tensor::uniform(rng, {6}, -0.3, 0.3),     // b1
      Tensor::uniform(rng, {6, 2}, -0.7, 0.7),  // w2
      Tensor::uniform(rng, {2}, -0.3, 0.3),     // b2
  };
  const Tensor x = Tensor::uniform(rng, {4, 3}, -1, 1);
  const Tensor target = Tensor::uniform(rng, {4, 2}, -1, 1);
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        Var h = t.add_rowwise(t.matmul(t.constant(x), vs[0]), vs[1]);
        h = t.leaky_relu(h, 0.2);
        Var out = t.add_rowwise(t.matmul(h, vs[2]), vs[3]);
        Var diff = t.sub(out, t.constant(target));
        return t.mean(t.mul(diff, diff));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("softmax row gradient sums to zero under constant upstream") {
  Rng rng(24);
  Tape tape;
  Var x = tape.leaf(Tensor::uniform(rng, {3, 7}, -2, 2), true);
  // mean of all entries gives every softmax output the same upstream weight
  tape.backward(tape.mean(tape.softmax(x, 1)));
  const Tensor& g = tape.grad(x);
  for (std::size_t r = 0; r < 3; ++r) {
    double row = 0.0;
    for (std::size_t j = 0; j < 7; ++j) row += g.at(r, j);
    CHECK(std::abs(row) < 1e-12);
  }
}

TEST_CASE("backward accumulates; zero_grad resets") {
  Tape tape;
  Var x = tape.leaf(Tensor::from({2}, {3.0, -4.0}), true);
  Var loss = tape.sum(tape.mul(x, x));
  tape.backward(loss);
  const Tensor g1 = tape.grad(x);
  tape.backward(loss);
  const Tensor& g2 = tape.grad(x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(g2.at(i) == 2.0 * g1.at(i));
  tape.zero_grad();
  tape.backward(loss);
  const Tensor& g3 = tape.grad(x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(g3.at(i) == g1.at(i));
}

TEST_CASE("no-grad leaves never accumulate") {
  Tape tape;
  Var x = tape.leaf(Tensor::from({2}, {1.0, 2.0}), false);
  Var y = tape.leaf(Tensor::from({2}, {5.0, 5.0}), true);
  tape.backward(tape.sum(tape.mul(x, y)));
  const Tensor& gx = tape.grad(x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(gx.at(i) == 0.0);
  const Tensor& gy = tape.grad(y);
  CHECK(gy.at(0) == 1.0);
  CHECK(gy.at(1) == 2.0);
}

TEST_CASE("division gradients follow the quotient rule") {
  Rng rng(25);
  std::vector<Tensor> params{Tensor::uniform(rng, {4}, 0.5, 2.0),
                             Tensor::uniform(rng, {4}, 0.5, 2.0)};
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        return t.sum(t.div(vs[0], vs[1]));
      },
      params);
  CHECK(err < 1e-6);
}

TEST_CASE("transpose and scale gradients") {
  Rng rng(26);
  std::vector<Tensor> params{Tensor::uniform(rng, {3, 4}, -1, 1)};
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        Var y = t.scale(t.transpose(vs[0]), 2.5);
        return t.sum(t.mul(y, y));
      },
      params);
  CHECK(err < 1e-6);
}
