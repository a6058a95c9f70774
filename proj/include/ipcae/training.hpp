#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipcae/analysis.hpp"
#include "ipcae/concrete.hpp"
#include "ipcae/data.hpp"
#include "ipcae/model.hpp"
#include "ipcae/objectives.hpp"

namespace ipcae {

/// The ten fixed repetition seeds used by every sweep and seed-aggregated
/// experiment.
inline constexpr std::array<std::uint64_t, 10> kFixedSeeds = {
    11, 22, 33, 44, 55, 66, 77, 88, 99, 1010};

enum class ImputePolicy { kAuto, kClassMean, kGlobalMean, kNone };

/// Everything one training run depends on besides the data itself.
struct TrainConfig {
  Task task = Task::kReconstruction;
  std::size_t k = 0;              ///< selected features
  std::size_t p = 0;              ///< psi embedding size; 0 means "use D"
  Variant variant = Variant::kDirect;
  bool bias = false;
  /// Pins the IP weight (identity for full_ip) and keeps it out of the
  /// optimizer; used to reproduce Direct exactly through the FullIP path.
  bool freeze_w_identity = false;
  double lambda = 0.0;            ///< GJSD strength; 0 disables
  double t0 = 10.0;
  double tb = 0.01;
  std::size_t epochs = 200;
  double lr = 0.001;
  OptKind optimizer = OptKind::kAdam;
  std::size_t batch_size = 256;
  std::uint64_t seed = 11;
  std::size_t warmup_epochs = 0;
  double weight_decay = 0.0;
  bool trace = false;
  std::vector<std::size_t> hidden = {200};
  double train_frac = 0.7;
  double val_frac = 0.1;
  ImputePolicy impute = ImputePolicy::kAuto;

  void validate(std::size_t d, std::size_t classes) const;
  /// Embedding size with the "0 means D" default applied.
  std::size_t effective_p(std::size_t d) const { return p == 0 ? d : p; }
};

/// One row of the per-epoch metrics log (matches the CSV schema).
struct EpochRecord {
  std::size_t epoch = 0;
  double temperature = 0.0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  double unique_pct = 0.0;
  double gjsd = 0.0;
  double alpha_norm = 0.0;
  double psi_norm = 0.0;
  std::optional<double> w_norm;  ///< absent for the direct variant
};

struct MetricLog {
  Task task = Task::kReconstruction;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double test_metric = 0.0;
  double test_up = 0.0;
  std::vector<std::size_t> selected;  ///< discrete selection, best checkpoint
};

struct TrainResult {
  MetricLog log;
  CaeModel best_model;
  UpdateTrace trace;  ///< populated only when config.trace is set
};

/// Imputes (per policy), assigns seeded splits, and min-max scales on the
/// training split. Call once per run; scaling statistics depend on the split.
Dataset prepare(Dataset raw, const TrainConfig& cfg);

/// Full training protocol: per epoch anneal T, shuffle mini-batches, take
/// stochastic forward + regularized-loss gradient steps, then validate in
/// discrete (eval) mode and log metrics. Returns the log together with the
/// checkpoint of the best validation loss. Aborts with NumericError if a
/// training loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const Dataset& ds);

struct EvalRecord {
  double loss = 0.0;
  double metric = 0.0;  ///< normalized Frobenius or top-1 accuracy
  double unique_pct = 0.0;
  std::vector<std::size_t> selected;
};

/// Discrete-selection evaluation of a model over one split.
EvalRecord evaluate(const CaeModel& model, Task task, const Dataset& ds,
                    Split split);

/// Pure eval-mode predictions (discrete selection, no stochasticity).
Tensor eval_predictions(const CaeModel& model, const Tensor& x);

/// Epochs-to-threshold ratio: B_b divided by the first 1-based epoch at
/// which run a's validation metric is at least as good as run b's best
/// validation metric over its whole log. +infinity when never reached.
double speedup(const MetricLog& a, const MetricLog& b);

enum class SweepAxis { kK, kP, kVariant, kLambda };

SweepAxis sweep_axis_from_name(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

/// Returns a copy of `base` with one axis value applied; validates the value.
TrainConfig apply_axis(const TrainConfig& base, SweepAxis axis,
                       const std::string& value);

struct RunSummary {
  std::uint64_t seed = 0;
  double test_metric = 0.0;
  double final_up = 0.0;
  std::string error;  ///< non-empty if the run failed
};

struct SweepRow {
  std::string value;
  std::vector<RunSummary> runs;
  double mean_metric = 0.0;
  double std_metric = 0.0;
  double mean_up = 0.0;
  std::size_t failed = 0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kK;
  std::vector<SweepRow> rows;
};

/// Runs every value over the ten fixed seeds. Per-run failures are recorded
/// in the summary without aborting the sweep.
SweepResult sweep(const TrainConfig& base, const Dataset& raw, SweepAxis axis,
                  const std::vector<std::string>& values);

/// CSV with exactly the columns epoch, temperature, lr, train_loss,
/// val_loss, val_metric, unique_pct, gjsd, alpha_norm, psi_norm, w_norm.
void write_metrics_csv(const MetricLog& log, const std::string& path);
/// Per-optimizer-step trace companion file.
void write_trace_csv(const UpdateTrace& trace, const std::string& path);

/// Field-by-field exact (bitwise double) comparison of two logs.
bool logs_identical(const MetricLog& a, const MetricLog& b);

}  // namespace ipcae
