#include "ipcae/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipcae/autodiff.hpp"
#include "ipcae/errors.hpp"
#include "ipcae/model.hpp"
#include "ipcae/rng.hpp"

namespace ipcae {

namespace {

void require_vec(const Tensor& t, std::size_t d, const char* what) {
  if (t.rank() != 1 || t.dim(0) != d)
    throw ShapeError(std::string(what) + ": expected length-" +
                     std::to_string(d) + " vector, got " + t.shape_str());
}

}  // namespace

Tensor cae_update_oracle(const Tensor& psi_i, const Tensor& grad, double eta) {
  require_vec(grad, psi_i.size(), "cae_update_oracle grad");
  return tensor::sub(psi_i, tensor::scale(grad, eta));
}

FullIpUpdate full_ip_update_oracle(const Tensor& w, const Tensor& psi_i,
                                   const Tensor& grad, double eta) {
  if (w.rank() != 2 || w.dim(0) != w.dim(1))
    throw ShapeError("full_ip_update_oracle: W must be square [D x D], got " +
                     w.shape_str());
  const std::size_t d = w.dim(0);
  require_vec(psi_i, d, "full_ip_update_oracle psi");
  require_vec(grad, d, "full_ip_update_oracle grad");

  const Tensor wt = tensor::transpose(w);
  // scaling term: psi . (psi - eta W^T grad)
  Tensor wt_grad = Tensor::zeros({d});
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += wt.at(i, j) * grad.at(j);
    wt_grad.at(i) = acc;
  }
  const double rescale =
      tensor::dot(psi_i, tensor::sub(psi_i, tensor::scale(wt_grad, eta)));

  FullIpUpdate out;
  out.transform = tensor::matmul(w, wt);
  for (std::size_t i = 0; i < d; ++i) out.transform.at(i, i) += rescale;

  Tensor w_psi = Tensor::zeros({d});
  Tensor t_grad = Tensor::zeros({d});
  for (std::size_t i = 0; i < d; ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      a += w.at(i, j) * psi_i.at(j);
      b += out.transform.at(i, j) * grad.at(j);
    }
    w_psi.at(i) = a;
    t_grad.at(i) = b;
  }
  out.next_logalpha = tensor::sub(w_psi, tensor::scale(t_grad, eta));
  return out;
}

Tensor scalar_ip_update_oracle(double w, const Tensor& psi_i,
                               const Tensor& grad, double eta) {
  require_vec(grad, psi_i.size(), "scalar_ip_update_oracle grad");
  const double grad_w = tensor::dot(grad, psi_i);
  const double w_next = w - eta * grad_w;
  Tensor out = Tensor::zeros({psi_i.size()});
  for (std::size_t i = 0; i < psi_i.size(); ++i)
    out.at(i) =
        w * psi_i.at(i) - eta * (w * w_next * grad.at(i) + grad_w * psi_i.at(i));
  return out;
}

double OracleCheckResult::worst() const {
  return std::max({direct_dev, full_dev, scalar_dev});
}

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.at(i) - b.at(i)));
  return worst;
}

Tensor row_vec(Rng& rng, std::size_t d, double lo, double hi) {
  return Tensor::uniform(rng, {1, d}, lo, hi);
}

Tensor as_flat(const Tensor& m) {
  Tensor out = Tensor::zeros({m.size()});
  for (std::size_t i = 0; i < m.size(); ++i) out.at(i) = m.at(i);
  return out;
}

}  // namespace

OracleCheckResult oracle_check(std::size_t trials,
                               const std::vector<std::size_t>& dims,
                               const std::vector<double>& etas,
                               std::uint64_t seed, bool corrupt) {
  if (trials == 0 || dims.empty() || etas.empty())
    throw ConfigError("oracle_check needs trials >= 1 and non-empty dims/etas");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("oracle_check dims must be >= 1");

  OracleCheckResult res;
  Rng rng(seed);
  const double nudge = corrupt ? 1e-6 : 0.0;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (std::size_t d : dims) {
      for (double eta : etas) {
        const Tensor w_full = Tensor::uniform(rng, {d, d}, -1.0, 1.0);
        const Tensor psi = row_vec(rng, d, -1.0, 1.0);
        const Tensor probe = row_vec(rng, d, -1.0, 1.0);
        const double w_scalar = rng.uniform(-1.5, 1.5);
        const Tensor psi_flat = as_flat(psi);
        const Tensor probe_flat = as_flat(probe);

        // Probe loss sum(c * log-alpha) makes dL/d(log-alpha) = c exactly,
        // isolating the parametrization algebra from loss curvature.

        {  // direct: log-alpha = psi
          Tape tape;
          Var psi_v = tape.leaf(psi, true);
          Var loss = tape.sum(tape.mul(psi_v, tape.constant(probe)));
          tape.backward(loss);
          Tensor psi_next = psi;
          Optimizer sgd({OptKind::kSgd, eta});
          std::vector<Tensor> grads{tape.grad(psi_v)};
          sgd.step({&psi_next}, grads, eta);
          Tensor oracle = cae_update_oracle(psi_flat, probe_flat, eta);
          if (corrupt) oracle.at(0) += nudge;
          res.direct_dev =
              std::max(res.direct_dev, max_abs_diff(as_flat(psi_next), oracle));
        }

        {  // full matrix: log-alpha = psi W^T
          Tape tape;
          Var w_v = tape.leaf(w_full, true);
          Var psi_v = tape.leaf(psi, true);
          Var la = tape.matmul(psi_v, tape.transpose(w_v));
          Var loss = tape.sum(tape.mul(la, tape.constant(probe)));
          tape.backward(loss);
          Tensor w_next = w_full;
          Tensor psi_next = psi;
          Optimizer sgd({OptKind::kSgd, eta});
          std::vector<Tensor> grads{tape.grad(w_v), tape.grad(psi_v)};
          sgd.step({&w_next, &psi_next}, grads, eta);
          const Tensor la_next =
              tensor::matmul(psi_next, tensor::transpose(w_next));
          FullIpUpdate oracle =
              full_ip_update_oracle(w_full, psi_flat, probe_flat, eta);
          if (corrupt) oracle.next_logalpha.at(0) += nudge;
          res.full_dev = std::max(
              res.full_dev, max_abs_diff(as_flat(la_next), oracle.next_logalpha));
        }

        {  // scalar: log-alpha = w psi
          Tape tape;
          Var w_v = tape.leaf(Tensor::scalar(w_scalar), true);
          Var psi_v = tape.leaf(psi, true);
          Var la = tape.mul_scalar(psi_v, w_v);
          Var loss = tape.sum(tape.mul(la, tape.constant(probe)));
          tape.backward(loss);
          Tensor w_next = Tensor::scalar(w_scalar);
          Tensor psi_next = psi;
          Optimizer sgd({OptKind::kSgd, eta});
          std::vector<Tensor> grads{tape.grad(w_v), tape.grad(psi_v)};
          sgd.step({&w_next, &psi_next}, grads, eta);
          const Tensor la_next = tensor::scale(psi_next, w_next.at(0));
          Tensor oracle =
              scalar_ip_update_oracle(w_scalar, psi_flat, probe_flat, eta);
          if (corrupt) oracle.at(0) += nudge;
          res.scalar_dev =
              std::max(res.scalar_dev, max_abs_diff(as_flat(la_next), oracle));
        }
      }
    }
  }
  return res;
}

}  // namespace ipcae
