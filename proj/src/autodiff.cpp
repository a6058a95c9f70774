#include "ipcae/autodiff.hpp"

#include <cmath>
#include <utility>

#include "ipcae/errors.hpp"
#include "ipcae/kernels.hpp"

namespace ipcae {

namespace {

void require_scalar(const Tensor& t, const char* what) {
  if (t.size() != 1)
    throw ShapeError(std::string(what) + ": expected scalar, got " +
                     t.shape_str());
}

void add_into(Tensor& dst, const Tensor& g) {
  kernels::zip(dst.data(), g.data(), dst.data(), dst.size(),
               [](double x, double y) { return x + y; });
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad,
               std::function<void(Tape&)> fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1, requires_grad};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Tensor& Tape::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.grad_live) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& dst = scratch_[id];
  if (dst.size() == 0)
    dst = Tensor::zeros(nodes_[id].value.shape());
  add_into(dst, g);
}

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    n.grad = Tensor();
    n.grad_live = false;
  }
}

void Tape::clear() {
  nodes_.clear();
  scratch_.clear();
}

void Tape::backward(Var loss) {
  require_scalar(nodes_.at(loss.id).value, "backward");
  if (!nodes_[loss.id].requires_grad)
    throw ShapeError("backward: loss does not depend on any parameter");
  scratch_.assign(nodes_.size(), Tensor());
  scratch_[loss.id] = Tensor::scalar(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.requires_grad && scratch_live(i)) n.backward(*this);
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    if (!scratch_live(i)) continue;
    Node& n = nodes_[i];
    if (!n.grad_live) {
      n.grad = Tensor::zeros(n.value.shape());
      n.grad_live = true;
    }
    add_into(n.grad, scratch_[i]);
  }
  scratch_.clear();
}

Var Tape::add(Var a, Var b) {
  Tensor out = tensor::add(value(a), value(b));
  const bool rg = a.requires_grad || b.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, b, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var Tape::sub(Var a, Var b) {
  Tensor out = tensor::sub(value(a), value(b));
  const bool rg = a.requires_grad || b.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, b, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(a.id, g);
    t.accumulate(b.id, tensor::scale(g, -1.0));
  });
}

Var Tape::mul(Var a, Var b) {
  Tensor out = tensor::mul(value(a), value(b));
  const bool rg = a.requires_grad || b.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, b, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(a.id, tensor::mul(g, t.value(b)));
    t.accumulate(b.id, tensor::mul(g, t.value(a)));
  });
}

Var Tape::div(Var a, Var b) {
  Tensor out = tensor::div(value(a), value(b));
  const bool rg = a.requires_grad || b.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, b, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& vb = t.value(b);
    t.accumulate(a.id, tensor::div(g, vb));
    // d/db (a/b) = -a / b^2 = -out / b
    Tensor gb = tensor::div(tensor::mul(g, t.nodes_[oid].value), vb);
    t.accumulate(b.id, tensor::scale(gb, -1.0));
  });
}

Var Tape::scale(Var a, double c) {
  Tensor out = tensor::scale(value(a), c);
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, c, oid](Tape& t) {
    t.accumulate(a.id, tensor::scale(t.upstream(oid), c));
  });
}

Var Tape::mul_scalar(Var a, Var s) {
  require_scalar(value(s), "mul_scalar");
  Tensor out = tensor::scale(value(a), value(s).at(0));
  const bool rg = a.requires_grad || s.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, s, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(a.id, tensor::scale(g, t.value(s).at(0)));
    t.accumulate(s.id, Tensor::scalar(tensor::dot(g, t.value(a))));
  });
}

Var Tape::matmul(Var a, Var b) {
  Tensor out = tensor::matmul(value(a), value(b));
  const bool rg = a.requires_grad || b.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [a, b, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(a.id, tensor::matmul(g, tensor::transpose(t.value(b))));
    t.accumulate(b.id, tensor::matmul(tensor::transpose(t.value(a)), g));
  });
}

Var Tape::transpose(Var a) {
  Tensor out = tensor::transpose(value(a));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    t.accumulate(a.id, tensor::transpose(t.upstream(oid)));
  });
}

Var Tape::exp(Var a) {
  Tensor out = tensor::exp(value(a));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    t.accumulate(a.id, tensor::mul(t.upstream(oid), t.nodes_[oid].value));
  });
}

Var Tape::log(Var a) {
  Tensor out = tensor::log(value(a));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    t.accumulate(a.id, tensor::div(t.upstream(oid), t.value(a)));
  });
}

Var Tape::log_clamped(Var a, double floor) {
  const Tensor& v = value(a);
  Tensor out = Tensor::zeros(v.shape());
  kernels::map(v.data(), out.data(), v.size(), [floor](double x) {
    return std::log(x < floor ? floor : x);
  });
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, floor, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& v = t.value(a);
    Tensor ga = Tensor::zeros(v.shape());
    kernels::zip(g.data(), v.data(), ga.data(), v.size(),
                 [floor](double gi, double xi) {
                   return xi >= floor ? gi / xi : 0.0;
                 });
    t.accumulate(a.id, ga);
  });
}

Var Tape::softmax(Var a, int axis) {
  if (value(a).rank() == 2 && axis == 0)
    return transpose(softmax(transpose(a), 1));
  Tensor out = tensor::softmax_rows(value(a));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& y = t.nodes_[oid].value;
    const std::size_t rows = y.rows(), cols = y.cols();
    Tensor ga = Tensor::zeros(y.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      double d = 0.0;
      for (std::size_t j = 0; j < cols; ++j)
        d += g.at(r * cols + j) * y.at(r * cols + j);
      for (std::size_t j = 0; j < cols; ++j)
        ga.at(r * cols + j) = y.at(r * cols + j) * (g.at(r * cols + j) - d);
    }
    t.accumulate(a.id, ga);
  });
}

Var Tape::logsumexp(Var a, int axis) {
  if (value(a).rank() == 2 && axis == 0) return logsumexp(transpose(a), 1);
  Tensor out = tensor::logsumexp_rows(value(a));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& v = t.value(a);
    const std::size_t rows = v.rows(), cols = v.cols();
    Tensor sm = tensor::softmax_rows(v);
    Tensor ga = Tensor::zeros(v.shape());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j)
        ga.at(r * cols + j) = g.at(r) * sm.at(r * cols + j);
    t.accumulate(a.id, ga);
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  const Tensor& v = value(a);
  Tensor out = Tensor::zeros(v.shape());
  kernels::map(v.data(), out.data(), v.size(),
               [slope](double x) { return x > 0.0 ? x : slope * x; });
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, slope, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& v = t.value(a);
    Tensor ga = Tensor::zeros(v.shape());
    // Subgradient at exactly 0 takes the negative-side slope.
    kernels::zip(g.data(), v.data(), ga.data(), v.size(),
                 [slope](double gi, double xi) {
                   return xi > 0.0 ? gi : slope * gi;
                 });
    t.accumulate(a.id, ga);
  });
}

Var Tape::add_rowwise(Var m, Var row) {
  Tensor out = tensor::add_rowwise(value(m), value(row));
  const bool rg = m.requires_grad || row.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [m, row, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(m.id, g);
    t.accumulate(row.id, tensor::sum_axis(g, 0));
  });
}

Var Tape::mul_rowwise(Var m, Var row) {
  Tensor out = tensor::mul_rowwise(value(m), value(row));
  const bool rg = m.requires_grad || row.requires_grad;
  const std::size_t oid = nodes_.size();
  return push(std::move(out), rg, [m, row, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    t.accumulate(m.id, tensor::mul_rowwise(g, t.value(row)));
    t.accumulate(row.id, tensor::sum_axis(tensor::mul(g, t.value(m)), 0));
  });
}

Var Tape::sum(Var a) {
  Tensor out = Tensor::scalar(tensor::sum(value(a)));
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, oid](Tape& t) {
    const double g0 = t.upstream(oid).at(0);
    t.accumulate(a.id, Tensor::full(t.value(a).shape(), g0));
  });
}

Var Tape::mean(Var a) {
  const double inv = 1.0 / static_cast<double>(value(a).size());
  return scale(sum(a), inv);
}

Var Tape::sum_axis(Var a, int axis) {
  Tensor out = tensor::sum_axis(value(a), axis);
  const std::size_t oid = nodes_.size();
  return push(std::move(out), a.requires_grad, [a, axis, oid](Tape& t) {
    const Tensor& g = t.upstream(oid);
    const Tensor& v = t.value(a);
    Tensor ga = Tensor::zeros(v.shape());
    for (std::size_t i = 0; i < v.dim(0); ++i)
      for (std::size_t j = 0; j < v.dim(1); ++j)
        ga.at(i, j) = axis == 0 ? g.at(j) : g.at(i);
    t.accumulate(a.id, ga);
  });
}

double grad_check(const LossBuilder& build, const std::vector<Tensor>& params,
                  double h) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p, true));
  Var loss = build(tape, leaves);
  tape.backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Var v : leaves) analytic.push_back(tape.grad(v));

  const auto eval = [&](const std::vector<Tensor>& p) {
    Tape t;
    std::vector<Var> ls;
    ls.reserve(p.size());
    for (const Tensor& x : p) ls.push_back(t.leaf(x, false));
    return t.value(build(t, ls)).at(0);
  };

  double worst = 0.0;
  std::vector<Tensor> probe = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    double diff_sq = 0.0, central_sq = 0.0;
    for (std::size_t c = 0; c < params[pi].size(); ++c) {
      const double orig = probe[pi].at(c);
      probe[pi].at(c) = orig + h;
      const double fp = eval(probe);
      probe[pi].at(c) = orig - h;
      const double fm = eval(probe);
      probe[pi].at(c) = orig;
      const double central = (fp - fm) / (2.0 * h);
      const double diff = analytic[pi].at(c) - central;
      diff_sq += diff * diff;
      central_sq += central * central;
    }
    const double err =
        std::sqrt(diff_sq) / std::max(std::sqrt(central_sq), 1e-8);
    worst = err > worst ? err : worst;
  }
  return worst;
}

}  // namespace ipcae
