// Times the serial reference kernels against the OpenMP build on sizes from
// typical training shapes up to square matmuls, and verifies on the fly that
// the two paths produce identical bits.
//
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ipcae/kernels.hpp"
#include "ipcae/rng.hpp"

using namespace ipcae;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <class F>
double time_best_of(int repeats, F f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

bool identical(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void bench_matmul(Rng& rng, std::size_t m, std::size_t k, std::size_t n,
                  int repeats) {
  const std::vector<double> a = random_vec(rng, m * k);
  const std::vector<double> b = random_vec(rng, k * n);
  std::vector<double> out_serial(m * n), out_parallel(m * n);

  const double t_serial = time_best_of(repeats, [&] {
    kernels::serial::matmul(a.data(), b.data(), out_serial.data(), m, k, n);
  });
  kernels::set_parallel(true);
  const double t_parallel = time_best_of(repeats, [&] {
    kernels::matmul(a.data(), b.data(), out_parallel.data(), m, k, n);
  });

  const double flops = 2.0 * m * k * n;
  std::printf("matmul %4zux%-4zu x %4zux%-4zu  serial %8.3f ms  parallel "
              "%8.3f ms  speedup %5.2fx  %7.2f MFLOP/s  bits %s\n",
              m, k, k, n, 1e3 * t_serial, 1e3 * t_parallel,
              t_serial / t_parallel, flops / t_parallel / 1e6,
              identical(out_serial, out_parallel) ? "equal" : "DIFFER");
}

void bench_softmax(Rng& rng, std::size_t rows, std::size_t cols,
                   int repeats) {
  const std::vector<double> in = random_vec(rng, rows * cols);
  std::vector<double> out_serial(rows * cols), out_parallel(rows * cols);
  const double t_serial = time_best_of(repeats, [&] {
    kernels::serial::softmax_rows(in.data(), out_serial.data(), rows, cols);
  });
  kernels::set_parallel(true);
  const double t_parallel = time_best_of(repeats, [&] {
    kernels::softmax_rows(in.data(), out_parallel.data(), rows, cols);
  });
  std::printf("softmax %5zu rows x %-5zu  serial %8.3f ms  parallel %8.3f "
              "ms  speedup %5.2fx  bits %s\n",
              rows, cols, 1e3 * t_serial, 1e3 * t_parallel,
              t_serial / t_parallel,
              identical(out_serial, out_parallel) ? "equal" : "DIFFER");
}

void bench_map(Rng& rng, std::size_t n, int repeats) {
  const std::vector<double> in = random_vec(rng, n);
  std::vector<double> out_serial(n), out_parallel(n);
  const auto f = [](double x) { return std::exp(0.5 * x); };
  const double t_serial = time_best_of(repeats, [&] {
    kernels::serial::map(in.data(), out_serial.data(), n, f);
  });
  kernels::set_parallel(true);
  const double t_parallel = time_best_of(
      repeats, [&] { kernels::map(in.data(), out_parallel.data(), n, f); });
  std::printf("exp map %10zu elems      serial %8.3f ms  parallel %8.3f ms "
              " speedup %5.2fx  bits %s\n",
              n, 1e3 * t_serial, 1e3 * t_parallel, t_serial / t_parallel,
              identical(out_serial, out_parallel) ? "equal" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  Rng rng(2024);

  std::puts("-- matmul --");
  bench_matmul(rng, 256, 64, 16, repeats);    // selection-sized
  bench_matmul(rng, 256, 16, 200, repeats);   // decoder front
  bench_matmul(rng, 256, 200, 784, repeats);  // decoder back
  bench_matmul(rng, 256, 256, 256, repeats);
  bench_matmul(rng, 512, 512, 512, repeats);

  std::puts("-- row softmax --");
  bench_softmax(rng, 64, 1024, repeats);
  bench_softmax(rng, 4096, 617, repeats);

  std::puts("-- elementwise --");
  bench_map(rng, 1 << 22, repeats);
  return 0;
}
