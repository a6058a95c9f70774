#include "ipcae/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ipcae/errors.hpp"

namespace ipcae {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <class T>
T get_as(const json& obj, const std::string& key, const char* type_name) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' must be " + type_name);
  }
}

double get_real(const json& obj, const std::string& key) {
  if (!obj.at(key).is_number())
    throw ConfigError("config key '" + key + "' must be a number");
  return obj.at(key).get<double>();
}

std::size_t get_uint(const json& obj, const std::string& key) {
  if (!obj.at(key).is_number_unsigned())
    throw ConfigError("config key '" + key +
                      "' must be a non-negative integer");
  return obj.at(key).get<std::size_t>();
}

Task task_from_name(const std::string& name) {
  if (name == "reconstruction") return Task::kReconstruction;
  if (name == "classification") return Task::kClassification;
  throw ConfigError("unknown task '" + name +
                    "' (expected reconstruction|classification)");
}

std::string task_name(Task t) {
  return t == Task::kReconstruction ? "reconstruction" : "classification";
}

OptKind optimizer_from_name(const std::string& name) {
  if (name == "adam") return OptKind::kAdam;
  if (name == "sgd") return OptKind::kSgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam|sgd)");
}

ImputePolicy impute_from_name(const std::string& name) {
  if (name == "auto") return ImputePolicy::kAuto;
  if (name == "class_mean") return ImputePolicy::kClassMean;
  if (name == "global_mean") return ImputePolicy::kGlobalMean;
  if (name == "none") return ImputePolicy::kNone;
  throw ConfigError("unknown impute policy '" + name +
                    "' (expected auto|class_mean|global_mean|none)");
}

std::string impute_name(ImputePolicy p) {
  switch (p) {
    case ImputePolicy::kAuto: return "auto";
    case ImputePolicy::kClassMean: return "class_mean";
    case ImputePolicy::kGlobalMean: return "global_mean";
    case ImputePolicy::kNone: return "none";
  }
  return "?";
}

SyntheticSpec parse_synthetic(const json& obj, Task task) {
  check_keys(obj,
             {"n", "d", "classes", "k_true", "planted", "sigma", "separation",
              "seed"},
             "synthetic");
  SyntheticSpec spec;
  spec.task = task;
  spec.n = get_uint(obj, "n");
  spec.d = get_uint(obj, "d");
  spec.k_true = get_uint(obj, "k_true");
  if (obj.contains("classes")) spec.classes = get_uint(obj, "classes");
  if (obj.contains("planted")) {
    if (!obj.at("planted").is_array())
      throw ConfigError("synthetic.planted must be an array of indices");
    for (const json& v : obj.at("planted")) {
      if (!v.is_number_unsigned())
        throw ConfigError("synthetic.planted entries must be non-negative "
                          "integers");
      spec.planted.push_back(v.get<std::size_t>());
    }
  }
  if (obj.contains("sigma")) spec.sigma = get_real(obj, "sigma");
  if (obj.contains("separation")) spec.separation = get_real(obj, "separation");
  if (obj.contains("seed")) spec.seed = get_uint(obj, "seed");
  spec.validate();
  return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  check_keys(root,
             {"task", "K", "P", "variant", "bias", "freeze_w_identity",
              "lambda", "T0", "TB", "epochs", "lr", "optimizer", "batch_size",
              "seed", "warmup_epochs", "weight_decay", "trace", "hidden",
              "train_frac", "val_frac", "impute", "data", "synthetic",
              "out_dir"},
             "config root");

  RunConfig cfg;
  TrainConfig& t = cfg.train;
  if (!root.contains("task")) throw ConfigError("config requires 'task'");
  t.task = task_from_name(get_as<std::string>(root, "task", "a string"));
  if (!root.contains("K")) throw ConfigError("config requires 'K'");
  t.k = get_uint(root, "K");
  if (root.contains("P")) t.p = get_uint(root, "P");
  if (root.contains("variant"))
    t.variant =
        variant_from_name(get_as<std::string>(root, "variant", "a string"));
  if (root.contains("bias")) t.bias = get_as<bool>(root, "bias", "a bool");
  if (root.contains("freeze_w_identity"))
    t.freeze_w_identity = get_as<bool>(root, "freeze_w_identity", "a bool");
  if (root.contains("lambda")) t.lambda = get_real(root, "lambda");
  if (root.contains("T0")) t.t0 = get_real(root, "T0");
  if (root.contains("TB")) t.tb = get_real(root, "TB");
  if (root.contains("epochs")) t.epochs = get_uint(root, "epochs");
  if (root.contains("lr")) t.lr = get_real(root, "lr");
  if (root.contains("optimizer"))
    t.optimizer =
        optimizer_from_name(get_as<std::string>(root, "optimizer", "a string"));
  if (root.contains("batch_size")) t.batch_size = get_uint(root, "batch_size");
  if (root.contains("seed")) t.seed = get_uint(root, "seed");
  if (root.contains("warmup_epochs"))
    t.warmup_epochs = get_uint(root, "warmup_epochs");
  if (root.contains("weight_decay"))
    t.weight_decay = get_real(root, "weight_decay");
  if (root.contains("trace")) t.trace = get_as<bool>(root, "trace", "a bool");
  if (root.contains("hidden")) {
    if (!root.at("hidden").is_array())
      throw ConfigError("config 'hidden' must be an array of layer widths");
    t.hidden.clear();
    for (const json& v : root.at("hidden")) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
        throw ConfigError("config 'hidden' entries must be positive integers");
      t.hidden.push_back(v.get<std::size_t>());
    }
  }
  if (root.contains("train_frac")) t.train_frac = get_real(root, "train_frac");
  if (root.contains("val_frac")) t.val_frac = get_real(root, "val_frac");
  if (root.contains("impute"))
    t.impute =
        impute_from_name(get_as<std::string>(root, "impute", "a string"));
  if (root.contains("out_dir"))
    cfg.out_dir = get_as<std::string>(root, "out_dir", "a string");

  const bool has_data = root.contains("data");
  const bool has_synth = root.contains("synthetic");
  if (has_data == has_synth)
    throw ConfigError("config needs exactly one of 'data' or 'synthetic'");
  if (has_data) {
    const json& d = root.at("data");
    if (!d.is_object()) throw ConfigError("config 'data' must be an object");
    check_keys(d, {"path", "label"}, "data");
    if (!d.contains("path")) throw ConfigError("data requires 'path'");
    cfg.source.path = get_as<std::string>(d, "path", "a string");
    if (d.contains("label")) {
      if (d.at("label").is_string())
        cfg.source.label_name = d.at("label").get<std::string>();
      else if (d.at("label").is_number_unsigned())
        cfg.source.label_index = d.at("label").get<std::size_t>();
      else
        throw ConfigError("data 'label' must be a column name or index");
    }
  } else {
    if (!root.at("synthetic").is_object())
      throw ConfigError("config 'synthetic' must be an object");
    cfg.source.synthetic = parse_synthetic(root.at("synthetic"), t.task);
  }
  if (t.task == Task::kClassification && has_data &&
      !cfg.source.label_name && !cfg.source.label_index)
    throw ConfigError("classification over CSV data requires data.label");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json root;
  root["task"] = task_name(t.task);
  root["K"] = t.k;
  root["P"] = t.p;
  root["variant"] = variant_name(t.variant);
  root["bias"] = t.bias;
  root["freeze_w_identity"] = t.freeze_w_identity;
  root["lambda"] = t.lambda;
  root["T0"] = t.t0;
  root["TB"] = t.tb;
  root["epochs"] = t.epochs;
  root["lr"] = t.lr;
  root["optimizer"] = t.optimizer == OptKind::kAdam ? "adam" : "sgd";
  root["batch_size"] = t.batch_size;
  root["seed"] = t.seed;
  root["warmup_epochs"] = t.warmup_epochs;
  root["weight_decay"] = t.weight_decay;
  root["trace"] = t.trace;
  root["hidden"] = t.hidden;
  root["train_frac"] = t.train_frac;
  root["val_frac"] = t.val_frac;
  root["impute"] = impute_name(t.impute);
  root["out_dir"] = cfg.out_dir;
  if (cfg.source.synthetic) {
    const SyntheticSpec& s = *cfg.source.synthetic;
    json synth;
    synth["n"] = s.n;
    synth["d"] = s.d;
    if (s.task == Task::kClassification) synth["classes"] = s.classes;
    synth["k_true"] = s.k_true;
    if (!s.planted.empty()) synth["planted"] = s.planted;
    synth["sigma"] = s.sigma;
    synth["separation"] = s.separation;
    synth["seed"] = s.seed;
    root["synthetic"] = synth;
  } else {
    json data;
    data["path"] = cfg.source.path.value_or("");
    if (cfg.source.label_name) data["label"] = *cfg.source.label_name;
    else if (cfg.source.label_index) data["label"] = *cfg.source.label_index;
    root["data"] = data;
  }
  return root.dump(2);
}

Dataset load_source(const DataSource& src) {
  if (src.synthetic) return gen_synthetic(*src.synthetic);
  if (!src.path) throw ConfigError("data source has no path");
  return load_csv(*src.path, src.label_name, src.label_index);
}

SyntheticSpec load_synth_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open synthetic spec: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  json root;
  try {
    root = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec is not valid JSON: ") +
                      e.what());
  }
  if (!root.is_object() || !root.contains("task"))
    throw ConfigError("synthetic spec requires a 'task' field");
  const Task task =
      task_from_name(get_as<std::string>(root, "task", "a string"));
  json body = root;
  body.erase("task");
  return parse_synthetic(body, task);
}

}  // namespace ipcae
