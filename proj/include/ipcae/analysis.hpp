#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ipcae/tensor.hpp"

namespace ipcae {

/// Closed-form single-step SGD update rules for the selector logits under
/// each parametrization. These are analytic predictions of what one
/// simultaneous gradient step does to log-alpha; the autodiff path must
/// reproduce them (see tests and the oracle-check CLI command).

/// Direct parametrization: next log-alpha_i = psi_i - eta * grad.
Tensor cae_update_oracle(const Tensor& psi_i, const Tensor& grad, double eta);

struct FullIpUpdate {
  Tensor next_logalpha;  ///< [D]
  Tensor transform;      ///< T_i = W W^T + (psi_i . (psi_i - eta W^T grad)) I
};

/// Full-matrix parametrization with P = D and no bias:
/// next log-alpha_i = W psi_i - eta T_i grad.
FullIpUpdate full_ip_update_oracle(const Tensor& w, const Tensor& psi_i,
                                   const Tensor& grad, double eta);

/// Scalar-weight parametrization:
/// next log-alpha_i = w psi_i - eta (w w' grad + (grad . psi_i) psi_i),
/// where w' = w - eta (grad . psi_i).
Tensor scalar_ip_update_oracle(double w, const Tensor& psi_i,
                               const Tensor& grad, double eta);

/// Per-variant maximum absolute deviation between the closed-form oracle and
/// the matching autodiff SGD step over a batch of random instances.
struct OracleCheckResult {
  double direct_dev = 0.0;
  double full_dev = 0.0;
  double scalar_dev = 0.0;

  double worst() const;
};

/// For each (trial, dim, eta) draws a random instance (W, psi_i, probe
/// gradient c), takes one simultaneous SGD step through the autodiff path on
/// the probe loss L = c . log-alpha_i (whose gradient at log-alpha is exactly
/// c), and compares the resulting log-alpha against the closed-form oracles.
/// `corrupt` deliberately perturbs the oracles (test hook for the failure
/// path).
OracleCheckResult oracle_check(std::size_t trials,
                               const std::vector<std::size_t>& dims,
                               const std::vector<double>& etas,
                               std::uint64_t seed, bool corrupt = false);

/// One per-optimizer-step record of update-rule components. Norms are
/// Frobenius; fields without a counterpart in the active variant are absent.
struct UpdateTraceRecord {
  std::size_t step = 0;
  double logalpha_norm = 0.0;
  double psi_norm = 0.0;
  std::optional<double> weight_norm;
  /// Mean over rows of psi_i(t) . psi_i(t+1) (the learned rescaling term).
  std::optional<double> psi_dot;
  /// Mean over rows of ||T_i||_F (full-matrix variant only).
  std::optional<double> transform_norm;
};

struct UpdateTrace {
  std::vector<UpdateTraceRecord> records;
};

}  // namespace ipcae
