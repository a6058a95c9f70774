#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "ipcae/errors.hpp"
#include "ipcae/training.hpp"

using namespace ipcae;

namespace {

SyntheticSpec tiny_classification() {
  SyntheticSpec spec;
  spec.task = Task::kClassification;
  spec.n = 160;
  spec.d = 6;
  spec.classes = 4;
  spec.k_true = 2;
  spec.seed = 99;
  return spec;
}

SyntheticSpec tiny_reconstruction() {
  SyntheticSpec spec;
  spec.task = Task::kReconstruction;
  spec.n = 150;
  spec.d = 8;
  spec.k_true = 3;
  spec.sigma = 0.02;
  spec.seed = 77;
  return spec;
}

TrainConfig tiny_config(Task task) {
  TrainConfig cfg;
  cfg.task = task;
  cfg.k = task == Task::kClassification ? 2 : 3;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.hidden = {8};
  cfg.seed = 11;
  return cfg;
}

MetricLog fake_log(Task task, const std::vector<double>& val_metrics) {
  MetricLog log;
  log.task = task;
  for (std::size_t e = 0; e < val_metrics.size(); ++e) {
    EpochRecord r;
    r.epoch = e;
    r.val_metric = val_metrics[e];
    r.val_loss = val_metrics[e];
    log.epochs.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("one-epoch smoke run completes with finite metrics") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.epochs = 1;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  const TrainResult result = train(cfg, ds);
  REQUIRE(result.log.epochs.size() == 1);
  CHECK(std::isfinite(result.log.epochs[0].train_loss));
  CHECK(std::isfinite(result.log.epochs[0].val_loss));
  CHECK(std::isfinite(result.log.test_metric));
  CHECK(result.log.selected.size() == 3);
}

TEST_CASE("training is deterministic given the seed") {
  const TrainConfig cfg = tiny_config(Task::kClassification);
  const Dataset ds = prepare(gen_synthetic(tiny_classification()), cfg);
  const TrainResult a = train(cfg, ds);
  const TrainResult b = train(cfg, ds);
  CHECK(logs_identical(a.log, b.log));
}

TEST_CASE("direct and frozen-identity full_ip produce identical logs") {
  TrainConfig direct = tiny_config(Task::kReconstruction);
  direct.epochs = 5;
  TrainConfig frozen = direct;
  frozen.variant = Variant::kFullIP;
  frozen.freeze_w_identity = true;

  const Dataset raw = gen_synthetic(tiny_reconstruction());
  const TrainResult a = train(direct, prepare(raw, direct));
  const TrainResult b = train(frozen, prepare(raw, frozen));
  CHECK(logs_identical(a.log, b.log));
}

TEST_CASE("temperature column follows the schedule exactly") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.epochs = 6;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  const TrainResult result = train(cfg, ds);
  const TemperatureSchedule sched(cfg.t0, cfg.tb, cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e)
    CHECK(result.log.epochs[e].temperature == sched.at(e));
}

TEST_CASE("best-validation bookkeeping matches the log") {
  TrainConfig cfg = tiny_config(Task::kClassification);
  cfg.epochs = 6;
  const Dataset ds = prepare(gen_synthetic(tiny_classification()), cfg);
  const TrainResult result = train(cfg, ds);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  for (const EpochRecord& r : result.log.epochs)
    if (r.val_loss < best) {
      best = r.val_loss;
      best_epoch = r.epoch;
    }
  CHECK(result.log.best_epoch == best_epoch);
  CHECK(result.log.best_val_loss == best);
}

TEST_CASE("evaluate on the best model reproduces the logged test metric") {
  TrainConfig cfg = tiny_config(Task::kClassification);
  const Dataset ds = prepare(gen_synthetic(tiny_classification()), cfg);
  const TrainResult result = train(cfg, ds);
  const EvalRecord rec =
      evaluate(result.best_model, cfg.task, ds, Split::kTest);
  CHECK(rec.metric == result.log.test_metric);
  CHECK(rec.selected == result.log.selected);
  const EvalRecord rec2 =
      evaluate(result.best_model, cfg.task, ds, Split::kTest);
  CHECK(rec2.metric == rec.metric);

  // the val split reproduces the best epoch's logged numbers exactly
  const EvalRecord vrec =
      evaluate(result.best_model, cfg.task, ds, Split::kVal);
  CHECK(vrec.loss == result.log.best_val_loss);
  CHECK(vrec.metric == result.log.epochs[result.log.best_epoch].val_metric);
}

TEST_CASE("shape mismatch between checkpoint and dataset is reported") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.epochs = 1;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  const TrainResult result = train(cfg, ds);
  SyntheticSpec other = tiny_reconstruction();
  other.d = 12;
  TrainConfig cfg2 = cfg;
  cfg2.k = 3;
  const Dataset wrong = prepare(gen_synthetic(other), cfg2);
  CHECK_THROWS_AS(evaluate(result.best_model, cfg.task, wrong, Split::kTest),
                  ShapeError);
}

TEST_CASE("speedup definition on constructed logs") {
  // identical logs: best-of-b at (1-based) epoch 3, so speedup = 4/3
  const MetricLog b =
      fake_log(Task::kReconstruction, {0.9, 0.5, 0.3, 0.4});
  CHECK(speedup(b, b) == doctest::Approx(4.0 / 3.0));
  CHECK(speedup(b, b) >= 1.0);

  // a reaches b's best (0.3) at 1-based epoch 50 of b's 200
  std::vector<double> a_vals(200, 1.0), b_vals(200, 1.0);
  b_vals[120] = 0.3;
  a_vals[49] = 0.25;
  const MetricLog a200 = fake_log(Task::kReconstruction, a_vals);
  const MetricLog b200 = fake_log(Task::kReconstruction, b_vals);
  CHECK(speedup(a200, b200) == 4.0);

  // never surpassing yields the infinity sentinel
  std::vector<double> never(200, 1.0);
  const MetricLog a_never = fake_log(Task::kReconstruction, never);
  CHECK(std::isinf(speedup(a_never, b200)));

  // accuracy flips the direction
  const MetricLog acc_a = fake_log(Task::kClassification, {10, 90, 95});
  const MetricLog acc_b = fake_log(Task::kClassification, {50, 60, 70});
  CHECK(speedup(acc_a, acc_b) == doctest::Approx(3.0 / 2.0));

  const MetricLog recon = fake_log(Task::kReconstruction, {1.0});
  CHECK_THROWS_AS(speedup(acc_a, recon), ConfigError);
}

TEST_CASE("sweep bookkeeping over a tiny axis") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.epochs = 2;
  const Dataset raw = gen_synthetic(tiny_reconstruction());
  const SweepResult res = sweep(cfg, raw, SweepAxis::kK, {"2", "3"});
  REQUIRE(res.rows.size() == 2);
  for (const SweepRow& row : res.rows) {
    CHECK(row.runs.size() == kFixedSeeds.size());
    CHECK(row.failed == 0);
    CHECK(std::isfinite(row.mean_metric));
  }

  // a P sweep entry with P = D matches a plain run under the same seed
  TrainConfig full = cfg;
  full.variant = Variant::kFullIP;
  const SweepResult pres = sweep(full, raw, SweepAxis::kP, {"8"});
  TrainConfig single = full;
  single.p = 8;
  single.seed = kFixedSeeds[0];
  const TrainResult direct_run = train(single, prepare(raw, single));
  CHECK(pres.rows[0].runs[0].test_metric == direct_run.log.test_metric);

  // lambda 0 equals the unregularized configuration
  const SweepResult lres = sweep(cfg, raw, SweepAxis::kLambda, {"0"});
  TrainConfig plain = cfg;
  plain.seed = kFixedSeeds[0];
  const TrainResult plain_run = train(plain, prepare(raw, plain));
  CHECK(lres.rows[0].runs[0].test_metric == plain_run.log.test_metric);

  CHECK_THROWS_AS(sweep(cfg, raw, SweepAxis::kK, {"nope"}), ConfigError);
  CHECK_THROWS_AS(sweep(cfg, raw, SweepAxis::kVariant, {"bogus"}),
                  ConfigError);
}

TEST_CASE("exploding training aborts with a diagnostic") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.optimizer = OptKind::kSgd;  // unbounded steps overflow quickly
  cfg.lr = 1e18;
  cfg.epochs = 3;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  try {
    train(cfg, ds);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("config validation catches bad setups") {
  TrainConfig cfg = tiny_config(Task::kClassification);
  cfg.k = 50;  // > D
  CHECK_THROWS_AS(cfg.validate(6, 4), ConfigError);
  cfg = tiny_config(Task::kClassification);
  cfg.variant = Variant::kScalarIP;
  cfg.p = 3;  // != D
  CHECK_THROWS_AS(cfg.validate(6, 4), ConfigError);
  cfg = tiny_config(Task::kReconstruction);
  cfg.bias = true;  // without full_ip
  CHECK_THROWS_AS(cfg.validate(6, 0), ConfigError);
}

TEST_CASE("metrics CSV carries the exact column schema") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.epochs = 2;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  const TrainResult result = train(cfg, ds);
  write_metrics_csv(result.log, "t_metrics.csv");
  std::ifstream is("t_metrics.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "epoch,temperature,lr,train_loss,val_loss,val_metric,unique_pct,"
        "gjsd,alpha_norm,psi_norm,w_norm");
  std::string row;
  std::size_t rows = 0;
  while (std::getline(is, row)) ++rows;
  CHECK(rows == 2);
  std::remove("t_metrics.csv");
}

TEST_CASE("trace records one entry per optimizer step") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  cfg.variant = Variant::kFullIP;
  cfg.trace = true;
  cfg.epochs = 2;
  const Dataset ds = prepare(gen_synthetic(tiny_reconstruction()), cfg);
  const TrainResult result = train(cfg, ds);
  const std::size_t n_train = ds.rows_of(Split::kTrain).size();
  const std::size_t batches =
      (n_train + cfg.batch_size - 1) / cfg.batch_size;
  CHECK(result.trace.records.size() == batches * cfg.epochs);
  CHECK(result.trace.records[0].step == 0);
  // step 0 norms equal the freshly initialized parameter norms
  Rng init_rng(cfg.seed, Rng::kInit);
  const SelectorParams fresh = SelectorParams::init(
      Variant::kFullIP, cfg.k, ds.d(), ds.d(), false, false, init_rng);
  CHECK(result.trace.records[0].psi_norm ==
        doctest::Approx(tensor::frobenius(fresh.psi)).epsilon(1e-15));
  REQUIRE(result.trace.records[0].weight_norm.has_value());
  REQUIRE(result.trace.records[0].transform_norm.has_value());
  REQUIRE(result.trace.records[0].psi_dot.has_value());

  // direct runs have no weight channel
  TrainConfig direct = tiny_config(Task::kReconstruction);
  direct.trace = true;
  direct.epochs = 1;
  const Dataset ds2 = prepare(gen_synthetic(tiny_reconstruction()), direct);
  const TrainResult r2 = train(direct, ds2);
  CHECK(!r2.trace.records[0].weight_norm.has_value());
  CHECK(!r2.trace.records[0].transform_norm.has_value());
}

TEST_CASE("empty split is a config error") {
  TrainConfig cfg = tiny_config(Task::kReconstruction);
  SyntheticSpec spec = tiny_reconstruction();
  spec.n = 3;  // too small for a non-empty validation split
  CHECK_THROWS_AS(train(cfg, prepare(gen_synthetic(spec), cfg)), ConfigError);
}
