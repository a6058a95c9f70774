#pragma once

#include <cstddef>

namespace ipcae::kernels {

/// The compute kernels come in two builds of the same contract: a plain
/// serial reference and an OpenMP-parallel version. Both produce bit-identical
/// results for every input because parallelism only ever splits work across
/// independent output elements; the summation order within each output
/// element is sequential and fixed. The serial build is kept as the oracle
/// for the parallel one (see tests/unit/test_kernels.cpp and
/// bench/bench_kernels.cpp).

bool parallel_enabled();
void set_parallel(bool on);

namespace serial {

/// Reference matrix product, plain triple loop: out[m x n] = a[m x k] * b[k x n].
/// Each out element is a sum over k in ascending order.
void matmul(const double* a, const double* b, double* out, std::size_t m,
            std::size_t k, std::size_t n);

/// Row-wise max-shifted softmax for an [rows x cols] matrix.
void softmax_rows(const double* in, double* out, std::size_t rows,
                  std::size_t cols);

/// Row-wise max-shifted log-sum-exp; out has one entry per row.
void logsumexp_rows(const double* in, double* out, std::size_t rows,
                    std::size_t cols);

template <class F>
void map(const double* in, double* out, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f(in[i]);
}

template <class F>
void zip(const double* a, const double* b, double* out, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
}

}  // namespace serial

// Work below these grain sizes runs serially; spawning a team costs more
// than the loop itself.
inline constexpr std::size_t kMapGrain = 16384;
inline constexpr std::size_t kMatmulGrain = 32768;

void matmul(const double* a, const double* b, double* out, std::size_t m,
            std::size_t k, std::size_t n);
void softmax_rows(const double* in, double* out, std::size_t rows,
                  std::size_t cols);
void logsumexp_rows(const double* in, double* out, std::size_t rows,
                    std::size_t cols);

template <class F>
void map(const double* in, double* out, std::size_t n, F f) {
  if (!parallel_enabled() || n < kMapGrain) {
    serial::map(in, out, n, f);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = f(in[i]);
}

template <class F>
void zip(const double* a, const double* b, double* out, std::size_t n, F f) {
  if (!parallel_enabled() || n < kMapGrain) {
    serial::zip(a, b, out, n, f);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = f(a[i], b[i]);
}

}  // namespace ipcae::kernels
