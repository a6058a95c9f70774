#include "ipcae/concrete.hpp"

#include <cmath>
#include <set>

#include "ipcae/errors.hpp"

namespace ipcae {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kDirect: return "direct";
    case Variant::kScalarIP: return "scalar_ip";
    case Variant::kDiagonalIP: return "diagonal_ip";
    case Variant::kFullIP: return "full_ip";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "direct") return Variant::kDirect;
  if (name == "scalar_ip") return Variant::kScalarIP;
  if (name == "diagonal_ip") return Variant::kDiagonalIP;
  if (name == "full_ip") return Variant::kFullIP;
  throw ConfigError("unknown selector variant '" + name +
                    "' (expected direct|scalar_ip|diagonal_ip|full_ip)");
}

void SelectorParams::validate() const {
  if (K == 0 || D == 0 || P == 0)
    throw ConfigError("selector requires K, D, P >= 1");
  if (variant != Variant::kFullIP && P != D)
    throw ConfigError("variant " + variant_name(variant) + " requires P = D (got P=" +
                      std::to_string(P) + ", D=" + std::to_string(D) + ")");
  if (psi.rank() != 2 || psi.dim(0) != K || psi.dim(1) != P)
    throw ConfigError("selector psi must be [K x P], got " + psi.shape_str());
  switch (variant) {
    case Variant::kDirect:
      if (weight.size() != 0)
        throw ConfigError("direct selector carries no weight tensor");
      break;
    case Variant::kScalarIP:
      if (weight.size() != 1)
        throw ConfigError("scalar_ip weight must be a single scalar");
      break;
    case Variant::kDiagonalIP:
      if (weight.rank() != 1 || weight.dim(0) != D)
        throw ConfigError("diagonal_ip weight must be a length-D vector, got " +
                          weight.shape_str());
      break;
    case Variant::kFullIP:
      if (weight.rank() != 2 || weight.dim(0) != D || weight.dim(1) != P)
        throw ConfigError("full_ip weight must be [D x P], got " +
                          weight.shape_str());
      break;
  }
  if (bias_enabled) {
    if (variant != Variant::kFullIP)
      throw ConfigError("bias is only available for full_ip");
    if (bias.rank() != 1 || bias.dim(0) != D)
      throw ConfigError("selector bias must be a length-D vector");
  }
  if (freeze_weight && variant == Variant::kDirect)
    throw ConfigError("freeze_weight has no effect on the direct variant");
}

SelectorParams SelectorParams::init(Variant variant, std::size_t k,
                                    std::size_t d, std::size_t p,
                                    bool bias_enabled, bool freeze_weight,
                                    Rng& rng) {
  SelectorParams s;
  s.variant = variant;
  s.K = k;
  s.D = d;
  s.P = p;
  s.bias_enabled = bias_enabled;
  s.freeze_weight = freeze_weight;
  const double bound = 1.0 / std::sqrt(static_cast<double>(p));
  s.psi = Tensor::uniform(rng, {k, p}, -bound, bound);
  switch (variant) {
    case Variant::kDirect:
      break;
    case Variant::kScalarIP:
      s.weight = Tensor::scalar(1.0);
      break;
    case Variant::kDiagonalIP:
      s.weight = Tensor::full({d}, 1.0);
      break;
    case Variant::kFullIP:
      // A frozen weight is pinned to the identity and consumes no draws, so
      // a frozen-identity run stays on the same random stream as Direct.
      s.weight = freeze_weight ? Tensor::identity(d)
                               : Tensor::uniform(rng, {d, p}, -bound, bound);
      break;
  }
  if (bias_enabled) s.bias = Tensor::zeros({d});
  s.validate();
  return s;
}

SelectorVars bind_selector(Tape& tape, const SelectorParams& params) {
  SelectorVars v;
  v.psi = tape.leaf(params.psi, true);
  if (params.variant != Variant::kDirect)
    v.weight = tape.leaf(params.weight, !params.freeze_weight);
  if (params.bias_enabled) v.bias = tape.leaf(params.bias, true);
  return v;
}

Var selector_logits(Tape& tape, const SelectorParams& params,
                    const SelectorVars& vars) {
  switch (params.variant) {
    case Variant::kDirect:
      return vars.psi;
    case Variant::kScalarIP:
      return tape.mul_scalar(vars.psi, vars.weight);
    case Variant::kDiagonalIP:
      return tape.mul_rowwise(vars.psi, vars.weight);
    case Variant::kFullIP: {
      Var la = tape.matmul(vars.psi, tape.transpose(vars.weight));
      if (params.bias_enabled) la = tape.add_rowwise(la, vars.bias);
      return la;
    }
  }
  throw ConfigError("unreachable selector variant");
}

Tensor selector_logits_value(const SelectorParams& params) {
  Tape tape;
  SelectorVars vars;
  vars.psi = tape.constant(params.psi);
  if (params.variant != Variant::kDirect)
    vars.weight = tape.constant(params.weight);
  if (params.bias_enabled) vars.bias = tape.constant(params.bias);
  return tape.value(selector_logits(tape, params, vars));
}

TemperatureSchedule::TemperatureSchedule(double t0_, double tb_,
                                         std::size_t epochs_)
    : t0(t0_), tb(tb_), epochs(epochs_) {
  if (!(t0 > tb && tb > 0.0))
    throw ConfigError("temperature schedule requires T0 > TB > 0");
  if (epochs < 1) throw ConfigError("temperature schedule requires B >= 1");
}

double TemperatureSchedule::at(std::size_t b) const {
  if (b > epochs)
    throw ConfigError("temperature queried past the end of the schedule");
  if (b == 0) return t0;
  if (b == epochs) return tb;
  const double frac = static_cast<double>(b) / static_cast<double>(epochs);
  return t0 * std::pow(tb / t0, frac);
}

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

Tensor gumbel_sample(Rng& rng, std::vector<std::size_t> shape) {
  Tensor g = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < g.size(); ++i)
    g.at(i) = gumbel_from_uniform(rng.uniform());
  return g;
}

Var sample_selection_with_noise(Tape& tape, Var logalpha, double temperature,
                                const Tensor& noise) {
  if (!(temperature > 0.0))
    throw ConfigError("selection sampling requires T > 0");
  Var perturbed = tape.add(logalpha, tape.constant(noise));
  return tape.softmax(tape.scale(perturbed, 1.0 / temperature), 1);
}

Var sample_selection(Tape& tape, Var logalpha, double temperature, Rng& rng) {
  Tensor noise = gumbel_sample(rng, tape.value(logalpha).shape());
  return sample_selection_with_noise(tape, logalpha, temperature, noise);
}

Var select_features(Tape& tape, Var x, Var selection) {
  return tape.matmul(x, tape.transpose(selection));
}

Tensor one_hot_selection(const std::vector<std::size_t>& indices,
                         std::size_t d) {
  Tensor m = Tensor::zeros({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d)
      throw ShapeError("one_hot_selection: index out of range");
    m.at(i, indices[i]) = 1.0;
  }
  return m;
}

std::vector<std::size_t> argmax_rows(const Tensor& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (m.at(i * m.cols() + j) > m.at(i * m.cols() + best)) best = j;
    out[i] = best;
  }
  return out;
}

std::vector<std::size_t> discrete_selection(const SelectorParams& params) {
  return argmax_rows(selector_logits_value(params));
}

double unique_percentage_of(const Tensor& logalpha) {
  const std::vector<std::size_t> idx = argmax_rows(logalpha);
  const std::set<std::size_t> distinct(idx.begin(), idx.end());
  return 100.0 * static_cast<double>(distinct.size()) /
         static_cast<double>(idx.size());
}

double unique_percentage(const SelectorParams& params) {
  return unique_percentage_of(selector_logits_value(params));
}

}  // namespace ipcae
