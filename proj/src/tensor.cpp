#include "ipcae/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "ipcae/errors.hpp"
#include "ipcae/kernels.hpp"

namespace ipcae {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 2)
    throw ShapeError("tensor rank must be 1 or 2, got rank " +
                     std::to_string(shape.size()));
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  const std::size_t n = shape_size(shape);
  t.shape_ = std::move(shape);
  t.data_.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t = zeros(std::move(shape));
  for (double& x : t.data_) x = v;
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
  if (shape_size(shape) != data.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::uniform(Rng& rng, std::vector<std::size_t> shape, double lo,
                       double hi) {
  Tensor t = zeros(std::move(shape));
  for (double& x : t.data_) x = rng.uniform(lo, hi);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i)
    os << (i ? "x" : "") << shape_[i];
  os << ']';
  return os.str();
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace tensor {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2)
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " +
                     a.shape_str());
}

void require_rowwise(const Tensor& m, const Tensor& row, const char* op) {
  require_rank2(m, op);
  if (row.rank() != 1 || row.dim(0) != m.dim(1))
    throw ShapeError(std::string(op) + ": row vector " + row.shape_str() +
                     " does not match matrix " + m.shape_str());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() +
                     " vs " + b.shape_str());
  Tensor out = Tensor::zeros({a.dim(0), b.dim(1)});
  kernels::matmul(a.data(), b.data(), out.data(), a.dim(0), a.dim(1),
                  b.dim(1));
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor out = Tensor::zeros({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  kernels::zip(a.data(), b.data(), out.data(), a.size(),
               [](double x, double y) { return x + y; });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  kernels::zip(a.data(), b.data(), out.data(), a.size(),
               [](double x, double y) { return x - y; });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  kernels::zip(a.data(), b.data(), out.data(), a.size(),
               [](double x, double y) { return x * y; });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  Tensor out = Tensor::zeros(a.shape());
  kernels::zip(a.data(), b.data(), out.data(), a.size(),
               [](double x, double y) { return x / y; });
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  kernels::map(a.data(), out.data(), a.size(),
               [c](double x) { return c * x; });
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  kernels::map(a.data(), out.data(), a.size(),
               [](double x) { return std::exp(x); });
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  kernels::map(a.data(), out.data(), a.size(),
               [](double x) { return std::log(x); });
  return out;
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
  require_rowwise(m, row, "add_rowwise");
  Tensor out = Tensor::zeros(m.shape());
  for (std::size_t i = 0; i < m.dim(0); ++i)
    for (std::size_t j = 0; j < m.dim(1); ++j)
      out.at(i, j) = m.at(i, j) + row.at(j);
  return out;
}

Tensor mul_rowwise(const Tensor& m, const Tensor& row) {
  require_rowwise(m, row, "mul_rowwise");
  Tensor out = Tensor::zeros(m.shape());
  for (std::size_t i = 0; i < m.dim(0); ++i)
    for (std::size_t j = 0; j < m.dim(1); ++j)
      out.at(i, j) = m.at(i, j) * row.at(j);
  return out;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i);
  return acc;
}

double mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

double max(const Tensor& a) {
  double mx = a.at(0);
  for (std::size_t i = 1; i < a.size(); ++i) mx = a.at(i) > mx ? a.at(i) : mx;
  return mx;
}

Tensor sum_axis(const Tensor& a, int axis) {
  require_rank2(a, "sum_axis");
  if (axis == 0) {
    Tensor out = Tensor::zeros({a.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
      for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j) += a.at(i, j);
    return out;
  }
  if (axis == 1) {
    Tensor out = Tensor::zeros({a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.dim(1); ++j) acc += a.at(i, j);
      out.at(i) = acc;
    }
    return out;
  }
  throw ShapeError("sum_axis: axis must be 0 or 1");
}

Tensor max_axis(const Tensor& a, int axis) {
  require_rank2(a, "max_axis");
  if (axis == 0) {
    Tensor out = Tensor::zeros({a.dim(1)});
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j) = a.at(0, j);
    for (std::size_t i = 1; i < a.dim(0); ++i)
      for (std::size_t j = 0; j < a.dim(1); ++j)
        if (a.at(i, j) > out.at(j)) out.at(j) = a.at(i, j);
    return out;
  }
  if (axis == 1) {
    Tensor out = Tensor::zeros({a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
      double mx = a.at(i, 0);
      for (std::size_t j = 1; j < a.dim(1); ++j)
        mx = a.at(i, j) > mx ? a.at(i, j) : mx;
      out.at(i) = mx;
    }
    return out;
  }
  throw ShapeError("max_axis: axis must be 0 or 1");
}

Tensor softmax_rows(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  kernels::softmax_rows(a.data(), out.data(), a.rows(), a.cols());
  return out;
}

Tensor logsumexp_rows(const Tensor& a) {
  Tensor out = Tensor::zeros({a.rows()});
  kernels::logsumexp_rows(a.data(), out.data(), a.rows(), a.cols());
  return out;
}

double frobenius(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i) * a.at(i);
  return std::sqrt(acc);
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i) * b.at(i);
  return acc;
}

}  // namespace tensor

}  // namespace ipcae
