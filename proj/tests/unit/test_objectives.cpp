#include <cmath>
#include <vector>

#include "doctest.h"
#include "ipcae/errors.hpp"
#include "ipcae/objectives.hpp"

using namespace ipcae;

namespace {

// KL-sum route: sum_i (1/K) KL(p_i || pbar). Independent of the library's
// entropy-decomposition implementation.
double gjsd_kl_oracle(const Tensor& logits) {
  const Tensor p = tensor::softmax_rows(logits);
  const std::size_t k = p.rows(), d = p.cols();
  std::vector<double> pbar(d, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) pbar[j] += p.at(i, j) / k;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double pij = p.at(i, j);
      if (pij > 0.0) acc += (pij / k) * std::log(pij / pbar[j]);
    }
  return acc;
}

Tensor disjoint_rows(std::size_t k, std::size_t d, double gap) {
  Tensor la = Tensor::zeros({k, d});
  for (std::size_t i = 0; i < k; ++i) la.at(i, i) = gap;
  return la;
}

}  // namespace

TEST_CASE("mse basics and brute force") {
  Tape tape;
  Rng rng(51);
  const Tensor a = Tensor::uniform(rng, {3, 4}, -1, 1);
  CHECK(tape.value(mse(tape, tape.constant(a), tape.constant(a))).at(0) ==
        0.0);

  const Tensor ones = Tensor::full({3, 4}, 1.0);
  Var shifted = tape.add(tape.constant(a), tape.constant(ones));
  CHECK(tape.value(mse(tape, shifted, tape.constant(a))).at(0) ==
        doctest::Approx(1.0).epsilon(1e-15));

  const Tensor b = Tensor::uniform(rng, {3, 4}, -1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a.at(i) - b.at(i)) * (a.at(i) - b.at(i));
  CHECK(tape.value(mse(tape, tape.constant(a), tape.constant(b))).at(0) ==
        doctest::Approx(acc / 12.0).epsilon(1e-14));
}

TEST_CASE("cross entropy at uniform logits is ln C") {
  const std::size_t c = 7;
  Tape tape;
  Var logits = tape.constant(Tensor::full({3, c}, 0.42));
  const double v = tape.value(cross_entropy(tape, logits, {0, 3, 6})).at(0);
  CHECK(std::abs(v - std::log(static_cast<double>(c))) < 1e-12);
}

TEST_CASE("cross entropy stays finite for huge logits") {
  Tape tape;
  Tensor t = Tensor::zeros({1, 4});
  t.at(0, 2) = 1000.0;
  const double v = tape.value(cross_entropy(tape, tape.constant(t), {2})).at(0);
  CHECK(std::isfinite(v));
  CHECK(v < 1e-10);
}

TEST_CASE("cross entropy matches an extended-precision oracle") {
  Rng rng(52);
  const Tensor logits = Tensor::uniform(rng, {5, 6}, -3, 3);
  const std::vector<int> labels{1, 0, 5, 2, 2};
  Tape tape;
  const double got =
      tape.value(cross_entropy(tape, tape.constant(logits), labels)).at(0);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < 5; ++i) {
    long double denom = 0.0L;
    for (std::size_t j = 0; j < 6; ++j)
      denom += expl(static_cast<long double>(logits.at(i, j)));
    const long double p =
        expl(static_cast<long double>(logits.at(i, labels[i]))) / denom;
    acc += -logl(p);
  }
  CHECK(got >= 0.0);
  CHECK(std::abs(got - static_cast<double>(acc / 5.0L)) < 1e-13);
}

TEST_CASE("cross entropy validates labels") {
  Tape tape;
  Var logits = tape.constant(Tensor::zeros({2, 3}));
  CHECK_THROWS_AS(cross_entropy(tape, logits, {0, 3}), ConfigError);
}

TEST_CASE("gjsd of identical rows is zero") {
  Rng rng(53);
  Tensor la = Tensor::zeros({4, 8});
  const Tensor row = Tensor::uniform(rng, {8}, -2, 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) la.at(i, j) = row.at(j);
  CHECK(std::abs(gjsd_value(la)) <= 1e-12);
}

TEST_CASE("gjsd of disjoint near-one-hot rows is ln K") {
  for (std::size_t k : {2u, 3u, 5u}) {
    const Tensor la = disjoint_rows(k, 8, 40.0);
    CHECK(std::abs(gjsd_value(la) - std::log(static_cast<double>(k))) < 1e-6);
  }
}

TEST_CASE("entropy decomposition agrees with the KL sum") {
  Rng rng(54);
  for (int it = 0; it < 1000; ++it) {
    const std::size_t k = 2 + it % 5;
    const std::size_t d = 3 + it % 7;
    const Tensor la = Tensor::uniform(rng, {k, d}, -6, 6);
    CHECK(std::abs(gjsd_value(la) - gjsd_kl_oracle(la)) <= 1e-9);
  }
}

TEST_CASE("gjsd is bounded by [0, ln K] and shift invariant") {
  Rng rng(55);
  for (int it = 0; it < 200; ++it) {
    const std::size_t k = 2 + it % 4;
    const Tensor la = Tensor::uniform(rng, {k, 9}, -5, 5);
    const double v = gjsd_value(la);
    CHECK(v >= 0.0);
    CHECK(v <= std::log(static_cast<double>(k)) + 1e-12);

    Tensor shifted = la;
    for (std::size_t i = 0; i < la.size(); ++i) shifted.at(i) += 13.25;
    CHECK(std::abs(gjsd_value(shifted) - v) < 1e-9);
  }
}

TEST_CASE("regularized loss subtracts lambda times the divergence") {
  Tape tape;
  Var task = tape.constant(Tensor::scalar(1.0));
  const Tensor la = disjoint_rows(2, 6, 40.0);
  Var logits = tape.constant(la);

  Var same = regularized_loss(tape, task, logits, 0.0);
  CHECK(tape.value(same).at(0) == 1.0);

  Var reg = regularized_loss(tape, task, logits, 0.05);
  CHECK(tape.value(reg).at(0) ==
        doctest::Approx(1.0 - 0.05 * std::log(2.0)).epsilon(1e-9));

  Tensor identical = Tensor::zeros({3, 6});
  Var reg_id = regularized_loss(tape, task, tape.constant(identical), 0.05);
  CHECK(tape.value(reg_id).at(0) == 1.0);

  CHECK_THROWS_AS(regularized_loss(tape, task, logits, -0.1), ConfigError);
}

TEST_CASE("gradient of the regularized loss passes finite differences") {
  Rng rng(56);
  std::vector<Tensor> params{Tensor::uniform(rng, {3, 6}, -1, 1)};
  const double err = grad_check(
      [&](Tape& t, const std::vector<Var>& vs) {
        Var task = t.mean(t.mul(vs[0], vs[0]));
        return regularized_loss(t, task, vs[0], 0.05);
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("normalized Frobenius metric") {
  Rng rng(57);
  const Tensor x = Tensor::uniform(rng, {4, 5}, -1, 1);
  CHECK(normalized_frobenius(x, x, 5) == 0.0);
  Tensor y = x;
  y.at(2, 3) += 0.75;
  CHECK(normalized_frobenius(x, y, 5) ==
        doctest::Approx(0.75 / 5.0).epsilon(1e-15));
  CHECK_THROWS_AS(normalized_frobenius(x, Tensor::zeros({4, 4}), 5),
                  ShapeError);
}

TEST_CASE("top-1 accuracy") {
  Tensor logits = Tensor::zeros({3, 4});
  logits.at(0, 1) = 5.0;
  logits.at(1, 0) = 2.0;
  logits.at(2, 3) = 1.0;
  CHECK(top1_accuracy(logits, {1, 0, 3}) == 100.0);
  CHECK(top1_accuracy(logits, {1, 0, 2}) ==
        doctest::Approx(200.0 / 3.0).epsilon(1e-12));
}
