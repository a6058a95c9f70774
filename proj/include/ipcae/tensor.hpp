#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipcae/rng.hpp"

namespace ipcae {

/// Dense row-major tensor of 64-bit reals, rank 1 or 2.
///
/// Tensors are plain values: copying copies the data, and every operation
/// below returns a fresh tensor. All reductions run in a fixed sequential
/// order per output element, so results are reproducible bit for bit across
/// runs and thread counts.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);
  static Tensor scalar(double v);
  static Tensor identity(std::size_t n);
  /// I.i.d. draws from (lo, hi).
  static Tensor uniform(Rng& rng, std::vector<std::size_t> shape, double lo,
                        double hi);

  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  /// Rows/cols of a rank-2 tensor; a rank-1 tensor reads as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : shape_[0]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }

  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

namespace tensor {

/// out[m x n] = a[m x k] * b[k x n]; summation sequential over k.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

/// Adds / multiplies a length-n vector into every row of an [m x n] matrix.
Tensor add_rowwise(const Tensor& m, const Tensor& row);
Tensor mul_rowwise(const Tensor& m, const Tensor& row);

double sum(const Tensor& a);
double mean(const Tensor& a);
double max(const Tensor& a);
/// Reduction along an axis of a rank-2 tensor: axis 0 collapses rows
/// (output length = cols), axis 1 collapses columns (output length = rows).
Tensor sum_axis(const Tensor& a, int axis);
Tensor max_axis(const Tensor& a, int axis);

Tensor softmax_rows(const Tensor& a);
Tensor logsumexp_rows(const Tensor& a);

double frobenius(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);

}  // namespace tensor

}  // namespace ipcae
