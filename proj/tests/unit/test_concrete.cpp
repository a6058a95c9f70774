#include <cmath>
#include <set>

#include "doctest.h"
#include "ipcae/concrete.hpp"
#include "ipcae/errors.hpp"

using namespace ipcae;

namespace {

SelectorParams make_full(std::size_t k, std::size_t d, std::size_t p,
                         Rng& rng, bool bias = false) {
  return SelectorParams::init(Variant::kFullIP, k, d, p, bias, false, rng);
}

}  // namespace

TEST_CASE("full_ip with identity weight reduces to direct exactly") {
  Rng rng(31);
  SelectorParams full = make_full(3, 5, 5, rng);
  full.weight = Tensor::identity(5);
  const Tensor la_full = selector_logits_value(full);

  SelectorParams direct;
  direct.variant = Variant::kDirect;
  direct.K = 3;
  direct.D = 5;
  direct.P = 5;
  direct.psi = full.psi;
  const Tensor la_direct = selector_logits_value(direct);
  for (std::size_t i = 0; i < la_full.size(); ++i)
    CHECK(la_full.at(i) == la_direct.at(i));
}

TEST_CASE("scalar_ip scales psi") {
  Rng rng(32);
  SelectorParams s =
      SelectorParams::init(Variant::kScalarIP, 1, 2, 2, false, false, rng);
  s.psi = Tensor::from({1, 2}, {1.0, -1.0});
  s.weight = Tensor::scalar(2.0);
  const Tensor la = selector_logits_value(s);
  CHECK(la.at(0, 0) == 2.0);
  CHECK(la.at(0, 1) == -2.0);
}

TEST_CASE("diagonal_ip scales per column") {
  Rng rng(33);
  SelectorParams s =
      SelectorParams::init(Variant::kDiagonalIP, 2, 3, 3, false, false, rng);
  s.psi = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  s.weight = Tensor::from({3}, {1.0, 0.5, -1.0});
  const Tensor la = selector_logits_value(s);
  CHECK(la.at(0, 0) == 1.0);
  CHECK(la.at(0, 1) == 1.0);
  CHECK(la.at(0, 2) == -3.0);
  CHECK(la.at(1, 1) == 2.5);
}

TEST_CASE("full_ip logits match the per-row brute force") {
  Rng rng(34);
  SelectorParams s = make_full(2, 3, 3, rng);
  const Tensor la = selector_logits_value(s);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t r = 0; r < 3; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 3; ++c)
        acc += s.weight.at(r, c) * s.psi.at(i, c);
      CHECK(la.at(i, r) == doctest::Approx(acc).epsilon(1e-15));
    }
}

TEST_CASE("full_ip bias adds per row") {
  Rng rng(35);
  SelectorParams s = make_full(2, 4, 4, rng, true);
  s.bias = Tensor::from({4}, {1, 2, 3, 4});
  SelectorParams no_bias = s;
  no_bias.bias_enabled = false;
  no_bias.bias = Tensor();
  const Tensor with = selector_logits_value(s);
  const Tensor without = selector_logits_value(no_bias);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(with.at(i, j) ==
            doctest::Approx(without.at(i, j) + s.bias.at(j)).epsilon(1e-15));
}

TEST_CASE("selector validation rejects bad combinations") {
  Rng rng(36);
  CHECK_THROWS_AS(
      SelectorParams::init(Variant::kDirect, 2, 4, 3, false, false, rng),
      ConfigError);
  CHECK_THROWS_AS(
      SelectorParams::init(Variant::kScalarIP, 2, 4, 3, false, false, rng),
      ConfigError);
  CHECK_THROWS_AS(
      SelectorParams::init(Variant::kDirect, 2, 4, 4, true, false, rng),
      ConfigError);
}

TEST_CASE("temperature schedule endpoints and midpoint") {
  const TemperatureSchedule sched(10.0, 0.01, 200);
  CHECK(sched.at(0) == 10.0);
  CHECK(sched.at(200) == 0.01);
  CHECK(std::abs(sched.at(100) - std::sqrt(10.0 * 0.01)) < 1e-12);
  CHECK_THROWS_AS(sched.at(201), ConfigError);
  CHECK_THROWS_AS(TemperatureSchedule(0.01, 10.0, 200), ConfigError);
}

TEST_CASE("gumbel transform fixed points") {
  CHECK(std::abs(gumbel_from_uniform(0.5) - (-std::log(std::log(2.0)))) <
        1e-15);
  CHECK(std::abs(gumbel_from_uniform(std::exp(-1.0))) < 1e-15);
}

TEST_CASE("gumbel sample mean approaches the Euler-Mascheroni constant") {
  Rng rng(37);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += gumbel_from_uniform(rng.uniform());
  CHECK(std::abs(sum / n - 0.5772156649) < 0.02);
}

TEST_CASE("sampled selection rows live on the simplex") {
  Rng rng(38);
  SelectorParams s = make_full(4, 9, 9, rng);
  for (double temperature : {10.0, 1.0, 0.05}) {
    Tape tape;
    SelectorVars vars = bind_selector(tape, s);
    Var la = selector_logits(tape, s, vars);
    Var m = sample_selection(tape, la, temperature, rng);
    const Tensor& mv = tape.value(m);
    for (std::size_t i = 0; i < 4; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 9; ++j) {
        CHECK(mv.at(i, j) >= 0.0);
        CHECK(mv.at(i, j) <= 1.0);
        row += mv.at(i, j);
      }
      CHECK(std::abs(row - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("low temperature concentrates samples on the dominant logit") {
  Rng rng(39);
  SelectorParams s;
  s.variant = Variant::kDirect;
  s.K = 1;
  s.D = 6;
  s.P = 6;
  s.psi = Tensor::zeros({1, 6});
  s.psi.at(0, 2) = 20.0;
  int concentrated = 0;
  for (int draw = 0; draw < 100; ++draw) {
    Tape tape;
    SelectorVars vars = bind_selector(tape, s);
    Var m = sample_selection(tape, selector_logits(tape, s, vars), 0.01, rng);
    if (tape.value(m).at(0, 2) > 0.99) ++concentrated;
  }
  CHECK(concentrated >= 99);
}

TEST_CASE("zero noise at T=1 reduces to a softmax of the logits") {
  Rng rng(40);
  SelectorParams s = make_full(2, 5, 5, rng);
  Tape tape;
  SelectorVars vars = bind_selector(tape, s);
  Var la = selector_logits(tape, s, vars);
  Var m = sample_selection_with_noise(tape, la, 1.0, Tensor::zeros({2, 5}));
  const Tensor expect = tensor::softmax_rows(tape.value(la));
  const Tensor& got = tape.value(m);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got.at(i) == doctest::Approx(expect.at(i)).epsilon(1e-15));
}

TEST_CASE("selection matrix application gathers and averages") {
  Tape tape;
  Var x = tape.constant(Tensor::from({1, 3}, {10, 20, 30}));
  const Tensor m = one_hot_selection({2, 0}, 3);
  Var xs = select_features(tape, x, tape.constant(m));
  CHECK(tape.value(xs).at(0, 0) == 30.0);
  CHECK(tape.value(xs).at(0, 1) == 10.0);

  Var uniform_m = tape.constant(Tensor::full({1, 3}, 1.0 / 3.0));
  Var avg = select_features(tape, x, uniform_m);
  CHECK(tape.value(avg).at(0, 0) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("select_features matches the naive double loop") {
  Rng rng(41);
  const Tensor x = Tensor::uniform(rng, {4, 6}, -1, 1);
  const Tensor m = Tensor::uniform(rng, {3, 6}, 0, 1);
  Tape tape;
  Var xs = select_features(tape, tape.constant(x), tape.constant(m));
  const Tensor& got = tape.value(xs);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 6; ++j) acc += x.at(b, j) * m.at(i, j);
      CHECK(got.at(b, i) == acc);
    }
}

TEST_CASE("discrete selection takes the row argmax, ties to lowest index") {
  SelectorParams s;
  s.variant = Variant::kDirect;
  s.K = 2;
  s.D = 3;
  s.P = 3;
  s.psi = Tensor::from({2, 3}, {0, 5, 1, 9, 2, 3});
  const std::vector<std::size_t> idx = discrete_selection(s);
  CHECK(idx == std::vector<std::size_t>{1, 0});

  s.psi = Tensor::from({2, 3}, {7, 7, 0, 1, 2, 2});
  const std::vector<std::size_t> tied = discrete_selection(s);
  CHECK(tied[0] == 0);
  CHECK(tied[1] == 1);
}

TEST_CASE("argmax is invariant to per-row constant shifts") {
  Rng rng(42);
  const Tensor la = Tensor::uniform(rng, {5, 8}, -2, 2);
  Tensor shifted = la;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 8; ++j) shifted.at(i, j) += 100.0 * (i + 1);
  CHECK(argmax_rows(la) == argmax_rows(shifted));
}

TEST_CASE("unique percentage counts distinct argmaxes") {
  SelectorParams s;
  s.variant = Variant::kDirect;
  s.K = 4;
  s.D = 10;
  s.P = 10;
  s.psi = Tensor::zeros({4, 10});
  s.psi.at(0, 3) = 1.0;
  s.psi.at(1, 3) = 1.0;
  s.psi.at(2, 7) = 1.0;
  s.psi.at(3, 9) = 1.0;
  CHECK(unique_percentage(s) == 75.0);

  s.psi = Tensor::zeros({4, 10});
  for (std::size_t i = 0; i < 4; ++i) s.psi.at(i, 5) = 2.0;
  CHECK(unique_percentage(s) == 25.0);

  s.psi = Tensor::zeros({4, 10});
  for (std::size_t i = 0; i < 4; ++i) s.psi.at(i, i) = 2.0;
  CHECK(unique_percentage(s) == 100.0);
}

TEST_CASE("unique percentage takes only the values 100 m / K") {
  Rng rng(43);
  for (int it = 0; it < 50; ++it) {
    const Tensor la = Tensor::uniform(rng, {6, 12}, -1, 1);
    const double up = unique_percentage_of(la);
    bool valid = false;
    for (std::size_t m = 1; m <= 6; ++m)
      if (up == doctest::Approx(100.0 * m / 6.0)) valid = true;
    CHECK(valid);
  }
}

TEST_CASE("selection converges to the one-hot argmax as T approaches zero") {
  Rng rng(44);
  SelectorParams s = make_full(3, 7, 7, rng);
  const Tensor noise = gumbel_sample(rng, {3, 7});
  Tape tape;
  SelectorVars vars = bind_selector(tape, s);
  Var la = selector_logits(tape, s, vars);
  Var m = sample_selection_with_noise(tape, la, 1e-4, noise);
  const Tensor perturbed = tensor::add(tape.value(la), noise);
  const std::vector<std::size_t> hot = argmax_rows(perturbed);
  const Tensor& mv = tape.value(m);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(mv.at(i, hot[i]) > 1.0 - 1e-3);
}

TEST_CASE("frozen identity weight consumes no random draws") {
  Rng a(55, Rng::kInit), b(55, Rng::kInit);
  SelectorParams direct =
      SelectorParams::init(Variant::kDirect, 3, 6, 6, false, false, a);
  SelectorParams frozen =
      SelectorParams::init(Variant::kFullIP, 3, 6, 6, false, true, b);
  CHECK(a.next_u64() == b.next_u64());
  for (std::size_t i = 0; i < direct.psi.size(); ++i)
    CHECK(direct.psi.at(i) == frozen.psi.at(i));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(frozen.weight.at(i, j) == (i == j ? 1.0 : 0.0));
}
