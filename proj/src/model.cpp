#include "ipcae/model.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include "ipcae/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ipcae {

Mlp Mlp::init(std::size_t in, const std::vector<std::size_t>& hidden,
              std::size_t out, Rng& rng, double slope) {
  if (in == 0 || out == 0) throw ConfigError("mlp requires in, out >= 1");
  Mlp mlp;
  mlp.slope = slope;
  std::vector<std::size_t> widths;
  widths.push_back(in);
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("mlp hidden widths must be >= 1");
    widths.push_back(h);
  }
  widths.push_back(out);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    Layer layer;
    layer.w = Tensor::uniform(rng, {widths[l], widths[l + 1]}, -bound, bound);
    layer.b = Tensor::zeros({widths[l + 1]});
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

MlpVars bind_mlp(Tape& tape, const Mlp& mlp) {
  MlpVars vars;
  for (const Mlp::Layer& l : mlp.layers)
    vars.layers.push_back({tape.leaf(l.w, true), tape.leaf(l.b, true)});
  return vars;
}

Var mlp_forward(Tape& tape, const Mlp& mlp, const MlpVars& vars, Var x,
                double* min_abs_preact) {
  if (min_abs_preact) *min_abs_preact = HUGE_VAL;
  Var h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    h = tape.add_rowwise(tape.matmul(h, vars.layers[l].w), vars.layers[l].b);
    if (l + 1 < mlp.layers.size()) {
      if (min_abs_preact) {
        const Tensor& pre = tape.value(h);
        for (std::size_t i = 0; i < pre.size(); ++i) {
          const double a = std::abs(pre.at(i));
          if (a < *min_abs_preact) *min_abs_preact = a;
        }
      }
      h = tape.leaky_relu(h, mlp.slope);
    }
  }
  return h;
}

BoundModel bind_model(Tape& tape, CaeModel& model) {
  BoundModel b;
  b.selector = bind_selector(tape, model.selector);
  b.vars.push_back(b.selector.psi);
  b.values.push_back(&model.selector.psi);
  if (model.selector.variant != Variant::kDirect &&
      !model.selector.freeze_weight) {
    b.vars.push_back(b.selector.weight);
    b.values.push_back(&model.selector.weight);
  }
  if (model.selector.bias_enabled) {
    b.vars.push_back(b.selector.bias);
    b.values.push_back(&model.selector.bias);
  }
  b.decoder = bind_mlp(tape, model.decoder);
  for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
    b.vars.push_back(b.decoder.layers[l].w);
    b.values.push_back(&model.decoder.layers[l].w);
    b.vars.push_back(b.decoder.layers[l].b);
    b.values.push_back(&model.decoder.layers[l].b);
  }
  return b;
}

ForwardResult model_forward(Tape& tape, const CaeModel& model,
                            const BoundModel& bound, Var x, double temperature,
                            Mode mode, Rng* rng, const Tensor* frozen_noise,
                            double* min_abs_preact) {
  ForwardResult r;
  r.logalpha = selector_logits(tape, model.selector, bound.selector);
  if (mode == Mode::kTrain) {
    if (frozen_noise)
      r.selection = sample_selection_with_noise(tape, r.logalpha, temperature,
                                                *frozen_noise);
    else if (rng)
      r.selection = sample_selection(tape, r.logalpha, temperature, *rng);
    else
      throw ConfigError("train-mode forward needs an rng or frozen noise");
  } else {
    r.selection = tape.constant(
        one_hot_selection(argmax_rows(tape.value(r.logalpha)),
                          model.selector.D));
  }
  Var xs = select_features(tape, x, r.selection);
  r.prediction =
      mlp_forward(tape, model.decoder, bound.decoder, xs, min_abs_preact);
  return r;
}

void Optimizer::step(const std::vector<Tensor*>& params,
                     const std::vector<Tensor>& grads, double lr) {
  if (params.size() != grads.size())
    throw ShapeError("optimizer: parameter/gradient count mismatch");
  if (cfg_.kind == OptKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i];
      const Tensor& g = grads[i];
      if (!p.same_shape(g))
        throw ShapeError("optimizer: gradient shape mismatch");
      for (std::size_t c = 0; c < p.size(); ++c) p.at(c) -= lr * g.at(c);
    }
    ++step_;
    return;
  }
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Tensor::zeros(p->shape()));
      v_.push_back(Tensor::zeros(p->shape()));
    }
  }
  if (m_.size() != params.size())
    throw ShapeError("optimizer: parameter list changed between steps");
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw ShapeError("optimizer: gradient shape mismatch");
    for (std::size_t c = 0; c < p.size(); ++c) {
      double& m = m_[i].at(c);
      double& v = v_[i].at(c);
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g.at(c);
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.at(c) * g.at(c);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      double upd = mhat / (std::sqrt(vhat) + cfg_.epsilon);
      if (cfg_.weight_decay > 0.0) upd += cfg_.weight_decay * p.at(c);
      p.at(c) -= lr * upd;
    }
  }
}

double lr_schedule(std::size_t epoch, std::size_t warmup_epochs,
                   double base_lr) {
  if (warmup_epochs == 0 || epoch >= warmup_epochs) return base_lr;
  constexpr double kWarmupFloor = 1e-6;
  return kWarmupFloor + (base_lr - kWarmupFloor) *
                            (static_cast<double>(epoch) /
                             static_cast<double>(warmup_epochs));
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return &t;
  return nullptr;
}

Checkpoint checkpoint_of(const CaeModel& model, std::string config_echo) {
  Checkpoint c;
  c.config_echo = std::move(config_echo);
  c.entries.emplace_back("selector.psi", model.selector.psi);
  if (model.selector.variant != Variant::kDirect)
    c.entries.emplace_back("selector.weight", model.selector.weight);
  if (model.selector.bias_enabled)
    c.entries.emplace_back("selector.bias", model.selector.bias);
  for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
    const std::string base = "decoder." + std::to_string(l) + ".";
    c.entries.emplace_back(base + "w", model.decoder.layers[l].w);
    c.entries.emplace_back(base + "b", model.decoder.layers[l].b);
  }
  return c;
}

CaeModel model_from_checkpoint(const Checkpoint& ckpt, Variant variant,
                               bool bias_enabled, bool freeze_weight,
                               double slope) {
  CaeModel model;
  model.selector.variant = variant;
  model.selector.bias_enabled = bias_enabled;
  model.selector.freeze_weight = freeze_weight;
  const Tensor* psi = ckpt.find("selector.psi");
  if (!psi) throw ParseError("checkpoint is missing selector.psi");
  if (psi->rank() != 2) throw ParseError("checkpoint selector.psi must be rank 2");
  model.selector.psi = *psi;
  model.selector.K = psi->dim(0);
  model.selector.P = psi->dim(1);
  model.selector.D = psi->dim(1);  // P = D except for full_ip
  if (variant != Variant::kDirect) {
    const Tensor* w = ckpt.find("selector.weight");
    if (!w) throw ParseError("checkpoint is missing selector.weight");
    model.selector.weight = *w;
    if (variant == Variant::kFullIP || variant == Variant::kDiagonalIP)
      model.selector.D = w->dim(0);
  }
  if (bias_enabled) {
    const Tensor* b = ckpt.find("selector.bias");
    if (!b) throw ParseError("checkpoint is missing selector.bias");
    model.selector.bias = *b;
  }
  model.selector.validate();
  model.decoder.slope = slope;
  for (std::size_t l = 0;; ++l) {
    const std::string base = "decoder." + std::to_string(l) + ".";
    const Tensor* w = ckpt.find(base + "w");
    const Tensor* b = ckpt.find(base + "b");
    if (!w && !b) break;
    if (!w || !b) throw ParseError("checkpoint decoder layer " +
                                   std::to_string(l) + " is incomplete");
    model.decoder.layers.push_back({*w, *b});
  }
  if (model.decoder.layers.empty())
    throw ParseError("checkpoint has no decoder layers");
  return model;
}

namespace {

constexpr std::uint32_t kMagic = 0x4B435049;  // "IPCK"
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open checkpoint for writing: " + path);
  write_pod(os, kMagic);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint64_t>(ckpt.config_echo.size()));
  os.write(ckpt.config_echo.data(),
           static_cast<std::streamsize>(ckpt.config_echo.size()));
  write_pod(os, static_cast<std::uint64_t>(ckpt.entries.size()));
  for (const auto& [name, t] : ckpt.entries) {
    write_pod(os, static_cast<std::uint64_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<std::uint64_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i)
      write_pod(os, static_cast<std::uint64_t>(t.dim(i)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw ParseError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open checkpoint: " + path);
  if (read_pod<std::uint32_t>(is) != kMagic)
    throw ParseError("not a checkpoint file: " + path);
  if (read_pod<std::uint32_t>(is) != kVersion)
    throw ParseError("unsupported checkpoint version in " + path);
  Checkpoint c;
  const auto cfg_len = read_pod<std::uint64_t>(is);
  c.config_echo.resize(cfg_len);
  is.read(c.config_echo.data(), static_cast<std::streamsize>(cfg_len));
  const auto n = read_pod<std::uint64_t>(is);
  for (std::uint64_t e = 0; e < n; ++e) {
    const auto name_len = read_pod<std::uint64_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rank = read_pod<std::uint64_t>(is);
    if (rank < 1 || rank > 2)
      throw ParseError("checkpoint tensor '" + name + "' has bad rank");
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      shape.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(is)));
      total *= shape.back();
    }
    std::vector<double> data(total);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw ParseError("checkpoint truncated in tensor '" + name + "'");
    c.entries.emplace_back(std::move(name),
                           Tensor::from(std::move(shape), std::move(data)));
  }
  return c;
}

}  // namespace ipcae
