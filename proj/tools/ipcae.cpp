// Command-line front end for concrete-autoencoder feature selection.
//
// Subcommands:
//   train        --config cfg.json [--seed N] [--variant V] [--P N]
//                [--lambda X] [--out DIR]
//                Runs the training protocol and writes metrics.csv,
//                summary.json and checkpoint.bin (plus trace.csv when the
//                config enables tracing) into the output directory.
//   eval         --checkpoint ckpt.bin [--data file.csv] --split train|val|test
//                Discrete-selection evaluation; prints a JSON record.
//   sweep        --config cfg.json --axis K|P|variant|lambda --values a,b,c
//                Ten fixed seeds per value; prints and saves a summary table.
//   oracle-check [--trials N] [--dims 2,...,10] [--eta 0.001,0.1] [--seed N]
//                Compares the closed-form update rules against autodiff SGD
//                steps; fails if any deviation exceeds 1e-8.
//   gen-synth    --spec spec.json --out data.csv
//                Writes a synthetic dataset plus its planted-feature JSON.
//
// Exit codes: 0 success, 1 config/validation error, 2 runtime or numerical
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ipcae/config.hpp"
#include "ipcae/errors.hpp"
#include "ipcae/format.hpp"
#include "ipcae/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

json eval_record_json(const ipcae::EvalRecord& rec, const std::string& split) {
  json j;
  j["split"] = split;
  j["loss"] = rec.loss;
  j["metric"] = rec.metric;
  j["unique_pct"] = rec.unique_pct;
  j["selected"] = rec.selected;
  return j;
}

int run_train(const std::string& config_path, const std::string& seed_flag,
              const std::string& variant_flag, const std::string& p_flag,
              const std::string& lambda_flag, const std::string& out_flag) {
  ipcae::RunConfig cfg = ipcae::load_run_config(config_path);
  if (!seed_flag.empty()) cfg.train.seed = std::stoull(seed_flag);
  if (!variant_flag.empty())
    cfg.train.variant = ipcae::variant_from_name(variant_flag);
  if (!p_flag.empty()) cfg.train.p = std::stoull(p_flag);
  if (!lambda_flag.empty()) cfg.train.lambda = std::stod(lambda_flag);
  if (!out_flag.empty()) cfg.out_dir = out_flag;

  const std::string echo = ipcae::run_config_json(cfg);
  const ipcae::Dataset raw = ipcae::load_source(cfg.source);
  const ipcae::Dataset ds = ipcae::prepare(raw, cfg.train);
  const ipcae::TrainResult result = ipcae::train(cfg.train, ds);

  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  ipcae::write_metrics_csv(result.log, (out / "metrics.csv").string());
  if (cfg.train.trace)
    ipcae::write_trace_csv(result.trace, (out / "trace.csv").string());
  ipcae::save_checkpoint(ipcae::checkpoint_of(result.best_model, echo),
                         (out / "checkpoint.bin").string());

  json summary;
  summary["config"] = json::parse(echo);
  json final_;
  final_["epochs"] = result.log.epochs.size();
  final_["best_epoch"] = result.log.best_epoch;
  final_["best_val_loss"] = result.log.best_val_loss;
  final_["test_metric"] = result.log.test_metric;
  final_["unique_pct"] = result.log.test_up;
  final_["selected"] = result.log.selected;
  summary["final"] = final_;
  std::ofstream os(out / "summary.json");
  os << summary.dump(2) << "\n";
  if (!os) throw ipcae::ParseError("failed writing summary.json");

  std::cout << "test_metric=" << ipcae::fmt_double(result.log.test_metric)
            << " unique_pct=" << ipcae::fmt_double(result.log.test_up)
            << " best_epoch=" << result.log.best_epoch << " out="
            << cfg.out_dir << "\n";
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& split_name) {
  const ipcae::Split split = ipcae::split_from_name(split_name);
  const ipcae::Checkpoint ckpt = ipcae::load_checkpoint(ckpt_path);
  ipcae::RunConfig cfg = ipcae::parse_run_config(ckpt.config_echo);
  const ipcae::CaeModel model = ipcae::model_from_checkpoint(
      ckpt, cfg.train.variant, cfg.train.bias, cfg.train.freeze_w_identity);
  if (!data_path.empty()) {
    // Replace the source with the supplied CSV; synthetic datasets exported
    // by gen-synth carry their labels in a "label" column.
    if (cfg.source.synthetic && cfg.train.task == ipcae::Task::kClassification)
      cfg.source.label_name = "label";
    cfg.source.synthetic.reset();
    cfg.source.path = data_path;
  }
  const ipcae::Dataset raw = ipcae::load_source(cfg.source);
  const ipcae::Dataset ds = ipcae::prepare(raw, cfg.train);
  const ipcae::EvalRecord rec =
      ipcae::evaluate(model, cfg.train.task, ds, split);
  std::cout << eval_record_json(rec, split_name).dump(2) << "\n";
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& axis_name,
              const std::string& values_list) {
  ipcae::RunConfig cfg = ipcae::load_run_config(config_path);
  const ipcae::SweepAxis axis = ipcae::sweep_axis_from_name(axis_name);
  const std::vector<std::string> values = split_csv_list(values_list);
  const ipcae::Dataset raw = ipcae::load_source(cfg.source);
  const ipcae::SweepResult result =
      ipcae::sweep(cfg.train, raw, axis, values);

  json out;
  out["axis"] = ipcae::sweep_axis_name(axis);
  out["rows"] = json::array();
  std::printf("%-12s %-24s %-12s %s\n", axis_name.c_str(),
              "test_metric (mean+-std)", "mean UP", "failed");
  for (const ipcae::SweepRow& row : result.rows) {
    std::printf("%-12s %-11.6g +- %-9.3g %-12.4g %zu/%zu\n",
                row.value.c_str(), row.mean_metric, row.std_metric,
                row.mean_up, row.failed, row.runs.size());
    json jrow;
    jrow["value"] = row.value;
    jrow["mean_metric"] = row.mean_metric;
    jrow["std_metric"] = row.std_metric;
    jrow["mean_up"] = row.mean_up;
    jrow["failed"] = row.failed;
    jrow["runs"] = json::array();
    for (const ipcae::RunSummary& rs : row.runs) {
      json jr;
      jr["seed"] = rs.seed;
      if (rs.error.empty()) {
        jr["test_metric"] = rs.test_metric;
        jr["final_up"] = rs.final_up;
      } else {
        jr["error"] = rs.error;
      }
      jrow["runs"].push_back(jr);
    }
    out["rows"].push_back(jrow);
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "sweep.json");
  os << out.dump(2) << "\n";
  if (!os) throw ipcae::ParseError("failed writing sweep.json");
  return 0;
}

int run_oracle_check(std::size_t trials, const std::string& dims_list,
                     const std::string& etas_list, std::uint64_t seed,
                     bool corrupt) {
  std::vector<std::size_t> dims;
  for (const std::string& s : split_csv_list(dims_list))
    dims.push_back(std::stoull(s));
  std::vector<double> etas;
  for (const std::string& s : split_csv_list(etas_list))
    etas.push_back(std::stod(s));
  const ipcae::OracleCheckResult res =
      ipcae::oracle_check(trials, dims, etas, seed, corrupt);
  std::printf("direct  max deviation: %.3e\n", res.direct_dev);
  std::printf("full    max deviation: %.3e\n", res.full_dev);
  std::printf("scalar  max deviation: %.3e\n", res.scalar_dev);
  constexpr double kTol = 1e-8;
  if (res.worst() > kTol) {
    std::fprintf(stderr, "oracle check FAILED: %.3e > %.0e\n", res.worst(),
                 kTol);
    return 2;
  }
  std::printf("all update-rule oracles within %.0e\n", kTol);
  return 0;
}

int run_gen_synth(const std::string& spec_path, const std::string& out_path) {
  const ipcae::SyntheticSpec spec = ipcae::load_synth_spec(spec_path);
  const ipcae::Dataset ds = ipcae::gen_synthetic(spec);
  ipcae::write_csv(ds, out_path);

  fs::path meta(out_path);
  meta.replace_extension(".planted.json");
  json j;
  j["planted"] = ds.planted;
  j["n"] = ds.n();
  j["d"] = ds.d();
  j["task"] = ds.has_labels() ? "classification" : "reconstruction";
  std::ofstream os(meta);
  os << j.dump(2) << "\n";
  if (!os) throw ipcae::ParseError("failed writing " + meta.string());
  std::cout << "wrote " << out_path << " and " << meta.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concrete autoencoder feature selection"};
  app.require_subcommand(1);

  std::string config_path, seed_flag, variant_flag, p_flag, lambda_flag,
      out_flag;
  CLI::App* train = app.add_subcommand("train", "run the training protocol");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--seed", seed_flag, "override config seed");
  train->add_option("--variant", variant_flag, "override selector variant");
  train->add_option("--P", p_flag, "override embedding size P");
  train->add_option("--lambda", lambda_flag, "override GJSD strength");
  train->add_option("--out", out_flag, "override output directory");

  std::string ckpt_path, data_path, split_name = "test";
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--data", data_path, "CSV to evaluate on (defaults to the "
                                        "checkpoint's own source)");
  eval->add_option("--split", split_name, "train|val|test")->required();

  std::string sweep_config, axis_name, values_list;
  CLI::App* sweep = app.add_subcommand("sweep", "seed-aggregated sweep");
  sweep->add_option("--config", sweep_config, "run config JSON")->required();
  sweep->add_option("--axis", axis_name, "K|P|variant|lambda")->required();
  sweep->add_option("--values", values_list, "comma-separated values")
      ->required();

  std::size_t trials = 100;
  std::string dims_list = "2,3,4,5,6,7,8,9,10";
  std::string etas_list = "0.001,0.1";
  std::uint64_t oc_seed = 11;
  bool corrupt = false;
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "verify closed-form update rules");
  oracle->add_option("--trials", trials, "instances per (dim, eta)");
  oracle->add_option("--dims", dims_list, "comma-separated dimensions");
  oracle->add_option("--eta", etas_list, "comma-separated learning rates");
  oracle->add_option("--seed", oc_seed, "rng seed");
  oracle->add_flag("--corrupt-oracle", corrupt, "")->group("");  // test hook

  std::string spec_path, synth_out;
  CLI::App* gen = app.add_subcommand("gen-synth", "generate synthetic data");
  gen->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  gen->add_option("--out", synth_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train)
      return run_train(config_path, seed_flag, variant_flag, p_flag,
                       lambda_flag, out_flag);
    if (*eval) return run_eval(ckpt_path, data_path, split_name);
    if (*sweep) return run_sweep(sweep_config, axis_name, values_list);
    if (*oracle)
      return run_oracle_check(trials, dims_list, etas_list, oc_seed, corrupt);
    if (*gen) return run_gen_synth(spec_path, synth_out);
  } catch (const ipcae::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const ipcae::ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const ipcae::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
