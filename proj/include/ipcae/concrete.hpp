#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipcae/autodiff.hpp"
#include "ipcae/rng.hpp"
#include "ipcae/tensor.hpp"

namespace ipcae {

/// How the selector logits log-alpha [K x D] are produced.
///
///   Direct     log-alpha = psi                  (requires P = D)
///   ScalarIP   log-alpha = w * psi              (w scalar, requires P = D)
///   DiagonalIP log-alpha_i = diag(w) psi_i      (w in R^D, requires P = D)
///   FullIP     log-alpha_i = W psi_i (+ b)      (W in R^{DxP}, b in R^D)
enum class Variant { kDirect, kScalarIP, kDiagonalIP, kFullIP };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Learnable state of the concrete selector layer.
struct SelectorParams {
  Variant variant = Variant::kDirect;
  std::size_t K = 0;  ///< number of selected features (rows of log-alpha)
  std::size_t D = 0;  ///< total input features (columns of log-alpha)
  std::size_t P = 0;  ///< embedding dimensionality of psi
  bool bias_enabled = false;  ///< FullIP only; off by default
  /// When set, the weight is pinned (identity/ones) at construction, drawn
  /// from no random stream, and excluded from gradient updates. Used to run
  /// FullIP as an exact replica of Direct.
  bool freeze_weight = false;

  Tensor psi;     ///< [K x P]
  Tensor weight;  ///< scalar {1} / diagonal {D} / full {D x P}; empty for Direct
  Tensor bias;    ///< {D} when enabled

  /// Validates the variant/shape combination; throws ConfigError.
  void validate() const;

  /// Fan-in-scaled uniform init on (-1/sqrt(P), 1/sqrt(P)) for psi and full W;
  /// scalar w starts at 1, diagonal w at all-ones, bias at zero.
  static SelectorParams init(Variant variant, std::size_t k, std::size_t d,
                             std::size_t p, bool bias_enabled,
                             bool freeze_weight, Rng& rng);
};

/// Leaf Vars for the selector parameters bound to one tape.
struct SelectorVars {
  Var psi;
  Var weight;  // unused for Direct or frozen weights bound without grad
  Var bias;    // unused unless bias_enabled
};

SelectorVars bind_selector(Tape& tape, const SelectorParams& params);

/// log-alpha [K x D] as a differentiable tape expression.
Var selector_logits(Tape& tape, const SelectorParams& params,
                    const SelectorVars& vars);

/// log-alpha materialized as a plain tensor (same kernels and operation
/// order as the tape path, so the two agree bit for bit).
Tensor selector_logits_value(const SelectorParams& params);

/// Exponential annealing from t0 at epoch 0 to tb at epoch `epochs`:
/// T(b) = t0 * (tb/t0)^(b/epochs). Both endpoints are returned exactly.
struct TemperatureSchedule {
  double t0 = 10.0;
  double tb = 0.01;
  std::size_t epochs = 200;

  TemperatureSchedule() = default;
  TemperatureSchedule(double t0_, double tb_, std::size_t epochs_);
  double at(std::size_t b) const;
};

/// Maps a uniform draw in (0,1) to a standard Gumbel variate -log(-log u).
double gumbel_from_uniform(double u);
/// I.i.d. standard Gumbel tensor.
Tensor gumbel_sample(Rng& rng, std::vector<std::size_t> shape);

/// One stochastic selection matrix M [K x D]: row i is
/// softmax((log-alpha_i + g_i) / T) with fresh Gumbel noise g. The noise and
/// temperature are constants; gradients flow only through log-alpha.
Var sample_selection(Tape& tape, Var logalpha, double temperature, Rng& rng);

/// Same, with caller-supplied noise (used by tests and gradient checks).
Var sample_selection_with_noise(Tape& tape, Var logalpha, double temperature,
                                const Tensor& noise);

/// x_S = x M^T: [batch x D] times [K x D]^T -> [batch x K].
Var select_features(Tape& tape, Var x, Var selection);

/// Discrete one-hot selection matrix for evaluation, rows one_hot(indices[i]).
Tensor one_hot_selection(const std::vector<std::size_t>& indices,
                         std::size_t d);

/// Per-row argmax of the logits; ties break to the lowest index, duplicates
/// are preserved.
std::vector<std::size_t> discrete_selection(const SelectorParams& params);
std::vector<std::size_t> argmax_rows(const Tensor& m);

/// Share of selector rows whose argmax points to a distinct feature,
/// in percent: 100 * |{argmax_j log-alpha_ij : i}| / K.
double unique_percentage(const SelectorParams& params);
double unique_percentage_of(const Tensor& logalpha);

}  // namespace ipcae
