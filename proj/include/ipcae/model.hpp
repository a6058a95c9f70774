#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipcae/autodiff.hpp"
#include "ipcae/concrete.hpp"
#include "ipcae/rng.hpp"
#include "ipcae/tensor.hpp"

namespace ipcae {

/// Fully connected network: LeakyReLU hidden layers, raw final outputs.
struct Mlp {
  struct Layer {
    Tensor w;  ///< [in x out]
    Tensor b;  ///< [out]
  };
  std::vector<Layer> layers;
  double slope = 0.2;

  /// Weights uniform on (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static Mlp init(std::size_t in, const std::vector<std::size_t>& hidden,
                  std::size_t out, Rng& rng, double slope = 0.2);
  std::size_t in_dim() const { return layers.front().w.dim(0); }
  std::size_t out_dim() const { return layers.back().w.dim(1); }
};

struct MlpVars {
  struct LayerVars {
    Var w, b;
  };
  std::vector<LayerVars> layers;
};

MlpVars bind_mlp(Tape& tape, const Mlp& mlp);

/// Forward pass for a [batch x in] input. When min_abs_preact is given, the
/// smallest |pre-activation| feeding a LeakyReLU is reported (gradient checks
/// use it to stay away from the kink).
Var mlp_forward(Tape& tape, const Mlp& mlp, const MlpVars& vars, Var x,
                double* min_abs_preact = nullptr);

/// Concrete selector plus decoder/predictor head.
struct CaeModel {
  SelectorParams selector;
  Mlp decoder;
};

/// Leaf bindings for one tape, plus the flat trainable-parameter view the
/// optimizer consumes. Binding order is fixed: psi, selector weight (unless
/// frozen), selector bias, then decoder layers.
struct BoundModel {
  SelectorVars selector;
  MlpVars decoder;
  std::vector<Var> vars;          ///< trainable leaves
  std::vector<Tensor*> values;    ///< parameter tensors, parallel to vars
};

BoundModel bind_model(Tape& tape, CaeModel& model);

enum class Mode { kTrain, kEval };

struct ForwardResult {
  Var prediction;  ///< [batch x out]
  Var logalpha;    ///< [K x D]
  Var selection;   ///< [K x D]; stochastic rows in train, one-hot in eval
};

/// Train mode samples one stochastic selection matrix (fresh Gumbel noise
/// from `rng`, or `frozen_noise` when supplied); eval mode uses the discrete
/// argmax selection and is a pure function of (params, x).
ForwardResult model_forward(Tape& tape, const CaeModel& model,
                            const BoundModel& bound, Var x, double temperature,
                            Mode mode, Rng* rng,
                            const Tensor* frozen_noise = nullptr,
                            double* min_abs_preact = nullptr);

enum class OptKind { kSgd, kAdam };

struct OptimizerConfig {
  OptKind kind = OptKind::kAdam;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  ///< decoupled; 0 disables
};

/// SGD / Adam over a fixed list of parameter slots. All gradients for a step
/// are computed before any parameter moves; moments are kept per slot.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  /// One simultaneous update of every slot. `lr` is the effective learning
  /// rate for this step (warmup may vary it per epoch).
  void step(const std::vector<Tensor*>& params,
            const std::vector<Tensor>& grads, double lr);

  const OptimizerConfig& config() const { return cfg_; }
  std::size_t steps_taken() const { return step_; }

 private:
  OptimizerConfig cfg_;
  std::size_t step_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Linear warmup from 1e-6 to base_lr over warmup_epochs, constant after;
/// warmup_epochs = 0 means a fixed rate.
double lr_schedule(std::size_t epoch, std::size_t warmup_epochs,
                   double base_lr);

/// Checkpoint container: named tensors plus an opaque config echo, stored as
/// little-endian 64-bit floats (layout documented in the README).
struct Checkpoint {
  std::string config_echo;
  std::vector<std::pair<std::string, Tensor>> entries;

  const Tensor* find(const std::string& name) const;
};

Checkpoint checkpoint_of(const CaeModel& model, std::string config_echo);
/// Rebuilds a model from stored tensors; K, D, P are inferred from shapes.
CaeModel model_from_checkpoint(const Checkpoint& ckpt, Variant variant,
                               bool bias_enabled, bool freeze_weight,
                               double slope = 0.2);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ipcae
