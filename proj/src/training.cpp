#include "ipcae/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "ipcae/errors.hpp"
#include "ipcae/format.hpp"

namespace ipcae {

void TrainConfig::validate(std::size_t d, std::size_t classes) const {
  if (k == 0 || k > d)
    throw ConfigError("K must satisfy 1 <= K <= D (K=" + std::to_string(k) +
                      ", D=" + std::to_string(d) + ")");
  const std::size_t pp = effective_p(d);
  if (variant != Variant::kFullIP && pp != d)
    throw ConfigError("variant " + variant_name(variant) +
                      " requires P = D; leave P at 0 or set it to D");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (warmup_epochs > epochs)
    throw ConfigError("warmup_epochs cannot exceed epochs");
  if (!(t0 > tb && tb > 0.0)) throw ConfigError("need T0 > TB > 0");
  if (task == Task::kClassification && classes < 2)
    throw ConfigError("classification needs a labeled dataset with >= 2 "
                      "classes");
  if (bias && variant != Variant::kFullIP)
    throw ConfigError("bias is only available for full_ip");
  if (freeze_w_identity && variant == Variant::kDirect)
    throw ConfigError("freeze_w_identity needs an IP variant");
  if (freeze_w_identity && variant == Variant::kFullIP && pp != d)
    throw ConfigError("freeze_w_identity (identity W) requires P = D");
}

Dataset prepare(Dataset raw, const TrainConfig& cfg) {
  if (raw.missing_count() > 0) {
    switch (cfg.impute) {
      case ImputePolicy::kNone:
        throw ConfigError("dataset has missing cells but imputation is off");
      case ImputePolicy::kClassMean:
        raw = impute_class_mean(std::move(raw));
        break;
      case ImputePolicy::kGlobalMean:
        raw = impute_global_mean(std::move(raw));
        break;
      case ImputePolicy::kAuto:
        raw = raw.has_labels() ? impute_class_mean(std::move(raw))
                               : impute_global_mean(std::move(raw));
        break;
    }
  }
  assign_splits(raw, cfg.seed, cfg.train_frac, cfg.val_frac);
  return minmax_scale(std::move(raw));
}

namespace {

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  Tensor out = Tensor::zeros({rows.size(), x.dim(1)});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < x.dim(1); ++j)
      out.at(i, j) = x.at(rows[i], j);
  return out;
}

double frob(const Tensor& t) { return tensor::frobenius(t); }

struct ValScore {
  double loss;
  double metric;
};

ValScore score_split(const CaeModel& model, Task task, const Tensor& x,
                     const std::vector<int>& labels) {
  const Tensor pred = eval_predictions(model, x);
  ValScore s{};
  if (task == Task::kReconstruction) {
    s.loss = mse_value(pred, x);
    s.metric = normalized_frobenius(x, pred, x.dim(1));
  } else {
    s.loss = cross_entropy_value(pred, labels);
    s.metric = top1_accuracy(pred, labels);
  }
  return s;
}

}  // namespace

Tensor eval_predictions(const CaeModel& model, const Tensor& x) {
  Tape tape;
  // Constant leaves: evaluation is a pure function of (params, x).
  BoundModel bound;
  bound.selector.psi = tape.constant(model.selector.psi);
  if (model.selector.variant != Variant::kDirect)
    bound.selector.weight = tape.constant(model.selector.weight);
  if (model.selector.bias_enabled)
    bound.selector.bias = tape.constant(model.selector.bias);
  for (const Mlp::Layer& l : model.decoder.layers)
    bound.decoder.layers.push_back(
        {tape.constant(l.w), tape.constant(l.b)});
  const ForwardResult r = model_forward(tape, model, bound,
                                        tape.constant(x), 1.0, Mode::kEval,
                                        nullptr);
  return tape.value(r.prediction);
}

EvalRecord evaluate(const CaeModel& model, Task task, const Dataset& ds,
                    Split split) {
  if (model.selector.D != ds.d())
    throw ShapeError("checkpoint expects D=" +
                     std::to_string(model.selector.D) + " features, dataset has " +
                     std::to_string(ds.d()));
  const Tensor x = ds.matrix_of(split);
  const std::vector<int> labels =
      task == Task::kClassification ? ds.labels_of(split) : std::vector<int>{};
  const ValScore s = score_split(model, task, x, labels);
  EvalRecord rec;
  rec.loss = s.loss;
  rec.metric = s.metric;
  rec.unique_pct = unique_percentage(model.selector);
  rec.selected = discrete_selection(model.selector);
  return rec;
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
  if (ds.split.size() != ds.n())
    throw ConfigError("dataset has no split assignment; run prepare() first");
  const std::size_t d = ds.d();
  const std::size_t classes = ds.num_classes();
  cfg.validate(d, classes);
  const std::size_t p = cfg.effective_p(d);
  const std::size_t out_dim =
      cfg.task == Task::kClassification ? classes : d;

  Rng init_rng(cfg.seed, Rng::kInit);
  Rng loop_rng(cfg.seed, Rng::kTrain);

  CaeModel model;
  model.selector = SelectorParams::init(cfg.variant, cfg.k, d, p, cfg.bias,
                                        cfg.freeze_w_identity, init_rng);
  model.decoder = Mlp::init(cfg.k, cfg.hidden, out_dim, init_rng);

  Optimizer opt({cfg.optimizer, cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  const TemperatureSchedule sched(cfg.t0, cfg.tb, cfg.epochs);

  const Tensor x_train = ds.matrix_of(Split::kTrain);
  const Tensor x_val = ds.matrix_of(Split::kVal);
  const std::vector<int> y_train = cfg.task == Task::kClassification
                                       ? ds.labels_of(Split::kTrain)
                                       : std::vector<int>{};
  const std::vector<int> y_val = cfg.task == Task::kClassification
                                     ? ds.labels_of(Split::kVal)
                                     : std::vector<int>{};
  const std::size_t n_train = x_train.dim(0);

  TrainResult result;
  result.log.task = cfg.task;
  result.log.best_val_loss = std::numeric_limits<double>::infinity();
  CaeModel best = model;
  std::size_t step_count = 0;

  std::vector<std::size_t> perm(n_train);
  std::iota(perm.begin(), perm.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double temperature = sched.at(epoch);
    const double lr_eff = lr_schedule(epoch, cfg.warmup_epochs, cfg.lr);
    shuffle_indices(perm, loop_rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n_train;
         start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(start + cfg.batch_size, n_train);
      const std::vector<std::size_t> batch_rows(perm.begin() + start,
                                                perm.begin() + stop);
      const Tensor xb = gather_rows(x_train, batch_rows);
      std::vector<int> yb;
      if (cfg.task == Task::kClassification)
        for (std::size_t r : batch_rows) yb.push_back(y_train[r]);

      Tape tape;
      BoundModel bound = bind_model(tape, model);
      const Var x_in = tape.constant(xb);
      const ForwardResult fwd = model_forward(tape, model, bound, x_in,
                                              temperature, Mode::kTrain,
                                              &loop_rng);
      Var task_loss = cfg.task == Task::kClassification
                          ? cross_entropy(tape, fwd.prediction, yb)
                          : mse(tape, fwd.prediction, x_in);
      Var loss = regularized_loss(tape, task_loss, fwd.logalpha, cfg.lambda);
      const double loss_value = tape.value(loss).at(0);
      if (!std::isfinite(loss_value))
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      loss_sum += loss_value * static_cast<double>(stop - start);

      tape.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(bound.vars.size());
      for (Var v : bound.vars) grads.push_back(tape.grad(v));

      std::optional<UpdateTraceRecord> trace_rec;
      Tensor psi_before;
      if (cfg.trace) {
        UpdateTraceRecord rec;
        rec.step = step_count;
        rec.logalpha_norm = frob(tape.value(fwd.logalpha));
        rec.psi_norm = frob(model.selector.psi);
        if (model.selector.variant != Variant::kDirect &&
            !model.selector.freeze_weight)
          rec.weight_norm = frob(model.selector.weight);
        if (model.selector.variant == Variant::kFullIP &&
            !model.selector.bias_enabled && model.selector.P == d) {
          const Tensor la_grad = tape.grad(fwd.logalpha);
          double t_norm_sum = 0.0;
          for (std::size_t i = 0; i < cfg.k; ++i) {
            Tensor psi_i = Tensor::zeros({p});
            Tensor g_i = Tensor::zeros({d});
            for (std::size_t j = 0; j < p; ++j)
              psi_i.at(j) = model.selector.psi.at(i, j);
            for (std::size_t j = 0; j < d; ++j)
              g_i.at(j) = la_grad.at(i, j);
            t_norm_sum += frob(full_ip_update_oracle(model.selector.weight,
                                                     psi_i, g_i, lr_eff)
                                   .transform);
          }
          rec.transform_norm = t_norm_sum / static_cast<double>(cfg.k);
        }
        psi_before = model.selector.psi;
        trace_rec = rec;
      }

      opt.step(bound.values, grads, lr_eff);
      ++step_count;

      if (trace_rec) {
        double dot_sum = 0.0;
        for (std::size_t i = 0; i < cfg.k; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j)
            acc += psi_before.at(i, j) * model.selector.psi.at(i, j);
          dot_sum += acc;
        }
        trace_rec->psi_dot = dot_sum / static_cast<double>(cfg.k);
        result.trace.records.push_back(*trace_rec);
      }
    }

    const ValScore val = score_split(model, cfg.task, x_val, y_val);
    const Tensor logalpha = selector_logits_value(model.selector);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.temperature = temperature;
    rec.lr = lr_eff;
    rec.train_loss = loss_sum / static_cast<double>(n_train);
    rec.val_loss = val.loss;
    rec.val_metric = val.metric;
    rec.unique_pct = unique_percentage_of(logalpha);
    rec.gjsd = gjsd_value(logalpha);
    rec.alpha_norm = frob(logalpha);
    rec.psi_norm = frob(model.selector.psi);
    // The weight-norm column reports trainable weights only; a frozen weight
    // is not a parameter, matching the direct variant's empty column.
    if (model.selector.variant != Variant::kDirect &&
        !model.selector.freeze_weight)
      rec.w_norm = frob(model.selector.weight);
    result.log.epochs.push_back(rec);

    if (val.loss < result.log.best_val_loss) {
      result.log.best_val_loss = val.loss;
      result.log.best_epoch = epoch;
      best = model;
    }
  }

  const EvalRecord test = evaluate(best, cfg.task, ds, Split::kTest);
  result.log.test_metric = test.metric;
  result.log.test_up = test.unique_pct;
  result.log.selected = test.selected;
  result.best_model = std::move(best);
  return result;
}

double speedup(const MetricLog& a, const MetricLog& b) {
  if (a.task != b.task)
    throw ConfigError("speedup compares logs of the same task/metric");
  if (a.epochs.empty() || b.epochs.empty())
    throw ConfigError("speedup needs complete logs");
  const bool lower_better = a.task == Task::kReconstruction;
  double best_b = b.epochs.front().val_metric;
  for (const EpochRecord& r : b.epochs)
    best_b = lower_better ? std::min(best_b, r.val_metric)
                          : std::max(best_b, r.val_metric);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    const double m = a.epochs[e].val_metric;
    if (lower_better ? m <= best_b : m >= best_b)
      return static_cast<double>(b.epochs.size()) /
             static_cast<double>(e + 1);
  }
  return std::numeric_limits<double>::infinity();
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "K") return SweepAxis::kK;
  if (name == "P") return SweepAxis::kP;
  if (name == "variant") return SweepAxis::kVariant;
  if (name == "lambda") return SweepAxis::kLambda;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected K|P|variant|lambda)");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kK: return "K";
    case SweepAxis::kP: return "P";
    case SweepAxis::kVariant: return "variant";
    case SweepAxis::kLambda: return "lambda";
  }
  return "?";
}

namespace {

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": bad integer '" + s + "'");
  }
  if (pos != s.size())
    throw ConfigError(std::string(what) + ": bad integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": bad number '" + s + "'");
  }
  if (pos != s.size())
    throw ConfigError(std::string(what) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

TrainConfig apply_axis(const TrainConfig& base, SweepAxis axis,
                       const std::string& value) {
  TrainConfig cfg = base;
  switch (axis) {
    case SweepAxis::kK:
      cfg.k = parse_size(value, "sweep K");
      break;
    case SweepAxis::kP:
      cfg.p = parse_size(value, "sweep P");
      break;
    case SweepAxis::kVariant:
      cfg.variant = variant_from_name(value);
      break;
    case SweepAxis::kLambda:
      cfg.lambda = parse_real(value, "sweep lambda");
      if (cfg.lambda < 0.0) throw ConfigError("sweep lambda must be >= 0");
      break;
  }
  return cfg;
}

SweepResult sweep(const TrainConfig& base, const Dataset& raw, SweepAxis axis,
                  const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  // Validate every value before any run starts.
  std::vector<TrainConfig> configs;
  for (const std::string& v : values) configs.push_back(apply_axis(base, axis, v));

  SweepResult result;
  result.axis = axis;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    SweepRow row;
    row.value = values[vi];
    double sum = 0.0, sum_sq = 0.0, up_sum = 0.0;
    std::size_t ok = 0;
    for (std::uint64_t seed : kFixedSeeds) {
      RunSummary rs;
      rs.seed = seed;
      TrainConfig cfg = configs[vi];
      cfg.seed = seed;
      try {
        const Dataset ds = prepare(raw, cfg);
        const TrainResult tr = train(cfg, ds);
        rs.test_metric = tr.log.test_metric;
        rs.final_up = tr.log.epochs.back().unique_pct;
        sum += rs.test_metric;
        sum_sq += rs.test_metric * rs.test_metric;
        up_sum += rs.final_up;
        ++ok;
      } catch (const std::exception& e) {
        rs.error = e.what();
        ++row.failed;
      }
      row.runs.push_back(rs);
    }
    if (ok > 0) {
      row.mean_metric = sum / static_cast<double>(ok);
      const double var =
          sum_sq / static_cast<double>(ok) - row.mean_metric * row.mean_metric;
      row.std_metric = std::sqrt(var > 0.0 ? var : 0.0);
      row.mean_up = up_sum / static_cast<double>(ok);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

void write_metrics_csv(const MetricLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open metrics CSV for writing: " + path);
  os << "epoch,temperature,lr,train_loss,val_loss,val_metric,unique_pct,"
        "gjsd,alpha_norm,psi_norm,w_norm\n";
  for (const EpochRecord& r : log.epochs) {
    os << r.epoch << ',' << fmt_double(r.temperature) << ','
       << fmt_double(r.lr) << ',' << fmt_double(r.train_loss) << ','
       << fmt_double(r.val_loss) << ',' << fmt_double(r.val_metric) << ','
       << fmt_double(r.unique_pct) << ',' << fmt_double(r.gjsd) << ','
       << fmt_double(r.alpha_norm) << ',' << fmt_double(r.psi_norm) << ',';
    if (r.w_norm) os << fmt_double(*r.w_norm);
    os << '\n';
  }
  if (!os) throw ParseError("failed writing metrics CSV: " + path);
}

void write_trace_csv(const UpdateTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open trace CSV for writing: " + path);
  os << "step,alpha_norm,psi_norm,w_norm,psi_dot,transform_norm\n";
  for (const UpdateTraceRecord& r : trace.records) {
    os << r.step << ',' << fmt_double(r.logalpha_norm) << ','
       << fmt_double(r.psi_norm) << ',';
    if (r.weight_norm) os << fmt_double(*r.weight_norm);
    os << ',';
    if (r.psi_dot) os << fmt_double(*r.psi_dot);
    os << ',';
    if (r.transform_norm) os << fmt_double(*r.transform_norm);
    os << '\n';
  }
  if (!os) throw ParseError("failed writing trace CSV: " + path);
}

bool logs_identical(const MetricLog& a, const MetricLog& b) {
  if (a.task != b.task || a.epochs.size() != b.epochs.size() ||
      a.best_epoch != b.best_epoch || a.best_val_loss != b.best_val_loss ||
      a.test_metric != b.test_metric || a.test_up != b.test_up ||
      a.selected != b.selected)
    return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const EpochRecord& x = a.epochs[i];
    const EpochRecord& y = b.epochs[i];
    if (x.epoch != y.epoch || x.temperature != y.temperature || x.lr != y.lr ||
        x.train_loss != y.train_loss || x.val_loss != y.val_loss ||
        x.val_metric != y.val_metric || x.unique_pct != y.unique_pct ||
        x.gjsd != y.gjsd || x.alpha_norm != y.alpha_norm ||
        x.psi_norm != y.psi_norm || x.w_norm.has_value() != y.w_norm.has_value())
      return false;
    if (x.w_norm && *x.w_norm != *y.w_norm) return false;
  }
  return true;
}

}  // namespace ipcae
