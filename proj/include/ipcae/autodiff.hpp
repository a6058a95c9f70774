#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ipcae/tensor.hpp"

namespace ipcae {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is
/// cleared or destroyed.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool requires_grad = false;
};

/// Define-by-run reverse-mode autodiff tape.
///
/// Every operation appends a record holding the output value and a backward
/// closure; records are therefore already in topological order and backward()
/// is a single reverse sweep. The tape is rebuilt for every forward pass.
///
/// Gradients accumulate: calling backward() twice without zero_grad() yields
/// exactly doubled gradients. Nodes created with requires_grad=false (and
/// nodes depending only on such) never receive a gradient buffer.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  /// Multiply by a compile-time-constant scalar.
  Var scale(Var a, double c);
  /// Multiply a tensor by a learnable scalar (a 1-element Var).
  Var mul_scalar(Var a, Var s);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var exp(Var a);
  Var log(Var a);
  /// log(max(x, floor)); the gradient is zero where the clamp engages.
  Var log_clamped(Var a, double floor);
  Var softmax(Var a, int axis);
  Var logsumexp(Var a, int axis);
  Var leaky_relu(Var a, double slope);
  Var add_rowwise(Var m, Var row);
  Var mul_rowwise(Var m, Var row);
  Var sum(Var a);
  Var mean(Var a);
  Var sum_axis(Var a, int axis);

  /// Reverse sweep from a scalar-shaped loss; seeds d(loss)/d(loss) = 1.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  /// Gradient accumulated so far (zeros if backward never reached v).
  const Tensor& grad(Var v);
  void zero_grad();
  /// Drops all records; outstanding Vars become invalid.
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void(Tape&)> backward;
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> fn);
  // Propagation runs through per-sweep scratch buffers; persistent grads
  // only receive the sweep's result, so two sweeps give exactly 2x.
  void accumulate(std::size_t id, const Tensor& g);
  const Tensor& upstream(std::size_t id) const { return scratch_[id]; }
  bool scratch_live(std::size_t id) const { return scratch_[id].size() > 0; }

  std::vector<Node> nodes_;
  std::vector<Tensor> scratch_;
};

/// Builds a scalar loss from leaf parameters on a fresh tape.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients against central finite differences
/// (step h) over every component of every parameter. Per parameter the error
/// is gradient-vector relative, ||autodiff - central|| / max(||central||,
/// 1e-8); the maximum over parameters is returned. (A per-component quotient
/// would measure finite-difference roundoff, not gradient correctness,
/// wherever a true component is ~1e-9.)
double grad_check(const LossBuilder& build, const std::vector<Tensor>& params,
                  double h = 1e-5);

}  // namespace ipcae
