#include <cmath>
#include <vector>

#include "doctest.h"
#include "ipcae/kernels.hpp"
#include "ipcae/rng.hpp"

using namespace ipcae;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0,
                               double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
  Rng rng(7);
  // sizes straddle the parallel grain on purpose
  const std::size_t cases[][3] = {
      {1, 1, 1}, {3, 4, 2}, {17, 31, 5}, {64, 64, 64}, {128, 96, 33}};
  for (const auto& c : cases) {
    const std::size_t m = c[0], k = c[1], n = c[2];
    const std::vector<double> a = random_vec(rng, m * k);
    const std::vector<double> b = random_vec(rng, k * n);
    std::vector<double> ref(m * n), out(m * n);
    kernels::serial::matmul(a.data(), b.data(), ref.data(), m, k, n);
    kernels::set_parallel(true);
    kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(out[i] == ref[i]);
    kernels::set_parallel(false);
    kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
    kernels::set_parallel(true);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(out[i] == ref[i]);
  }
}

TEST_CASE("parallel softmax and logsumexp match the serial reference") {
  Rng rng(13);
  const std::size_t rows = 300, cols = 80;  // above the grain
  const std::vector<double> in = random_vec(rng, rows * cols, -30.0, 30.0);
  std::vector<double> ref(rows * cols), out(rows * cols);
  kernels::serial::softmax_rows(in.data(), ref.data(), rows, cols);
  kernels::softmax_rows(in.data(), out.data(), rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == ref[i]);

  std::vector<double> lref(rows), lout(rows);
  kernels::serial::logsumexp_rows(in.data(), lref.data(), rows, cols);
  kernels::logsumexp_rows(in.data(), lout.data(), rows, cols);
  for (std::size_t i = 0; i < rows; ++i) CHECK(lout[i] == lref[i]);
}

TEST_CASE("parallel map/zip match the serial reference above the grain") {
  Rng rng(29);
  const std::size_t n = kernels::kMapGrain * 2 + 17;
  const std::vector<double> a = random_vec(rng, n);
  const std::vector<double> b = random_vec(rng, n, 0.5, 2.0);
  std::vector<double> ref(n), out(n);
  const auto f = [](double x) { return std::exp(0.25 * x); };
  kernels::serial::map(a.data(), ref.data(), n, f);
  kernels::map(a.data(), out.data(), n, f);
  for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == ref[i]);
  const auto g = [](double x, double y) { return x / y + x * y; };
  kernels::serial::zip(a.data(), b.data(), ref.data(), n, g);
  kernels::zip(a.data(), b.data(), out.data(), n, g);
  for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == ref[i]);
}
