#include "ipcae/kernels.hpp"

#include <atomic>
#include <cmath>

namespace ipcae::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void matmul(const double* a, const double* b, double* out, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
}

void softmax_rows(const double* in, double* out, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
  }
}

void logsumexp_rows(const double* in, double* out, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(x[j] - mx);
    out[r] = mx + std::log(sum);
  }
}

}  // namespace serial

// Row-blocked variant of the reference product. The inner accumulation
// visits k in the same ascending order as serial::matmul for every output
// element, so the two agree bit for bit; the k-middle loop order just
// streams b row-major.
static void matmul_rows(const double* a, const double* b, double* out,
                        std::size_t i0, std::size_t i1, std::size_t k,
                        std::size_t n) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* dst = out + i * n;
    for (std::size_t j = 0; j < n; ++j) dst[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += av * brow[j];
    }
  }
}

void matmul(const double* a, const double* b, double* out, std::size_t m,
            std::size_t k, std::size_t n) {
  if (!parallel_enabled() || m * n * k < kMatmulGrain) {
    matmul_rows(a, b, out, 0, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
    matmul_rows(a, b, out, static_cast<std::size_t>(i),
                static_cast<std::size_t>(i) + 1, k, n);
}

void softmax_rows(const double* in, double* out, std::size_t rows,
                  std::size_t cols) {
  if (!parallel_enabled() || rows * cols < kMapGrain) {
    serial::softmax_rows(in, out, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r)
    serial::softmax_rows(in + r * cols, out + r * cols, 1, cols);
}

void logsumexp_rows(const double* in, double* out, std::size_t rows,
                    std::size_t cols) {
  if (!parallel_enabled() || rows * cols < kMapGrain) {
    serial::logsumexp_rows(in, out, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r)
    serial::logsumexp_rows(in + r * cols, out + r, 1, cols);
}

}  // namespace ipcae::kernels
