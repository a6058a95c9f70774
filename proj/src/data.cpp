#include "ipcae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "ipcae/errors.hpp"
#include "ipcae/format.hpp"
#include "ipcae/rng.hpp"

namespace ipcae {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing(double x) { return std::isnan(x); }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

}  // namespace

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (expected train|val|test)");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::size_t Dataset::missing_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < X.size(); ++i)
    if (is_missing(X.at(i))) ++c;
  return c;
}

std::vector<std::size_t> Dataset::rows_of(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < split.size(); ++r)
    if (split[r] == s) rows.push_back(r);
  return rows;
}

Tensor Dataset::matrix_of(Split s) const {
  const std::vector<std::size_t> rows = rows_of(s);
  if (rows.empty())
    throw ConfigError("split '" + split_name(s) + "' is empty");
  Tensor m = Tensor::zeros({rows.size(), d()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d(); ++j) m.at(i, j) = X.at(rows[i], j);
  return m;
}

std::vector<int> Dataset::labels_of(Split s) const {
  std::vector<int> out;
  for (std::size_t r : rows_of(s)) out.push_back(labels[r]);
  return out;
}

Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_name,
                 std::optional<std::size_t> label_index) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(is, line) || trim(line).empty())
    throw ParseError("empty CSV file: " + path);
  const std::vector<std::string> header = split_line(line);
  const std::size_t n_cols = header.size();

  std::optional<std::size_t> label_col = label_index;
  if (label_name) {
    for (std::size_t c = 0; c < n_cols; ++c)
      if (header[c] == *label_name) label_col = c;
    if (!label_col)
      throw ParseError("label column '" + *label_name + "' not found in " +
                       path);
  }
  if (label_col && *label_col >= n_cols)
    throw ParseError("label column index " + std::to_string(*label_col) +
                     " out of range for " + std::to_string(n_cols) +
                     " columns");

  Dataset ds;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (!label_col || c != *label_col) ds.feature_names.push_back(header[c]);

  std::vector<double> values;
  std::vector<std::string> label_tokens;
  std::size_t n_rows = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != n_cols)
      throw ParseError(path + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(n_cols));
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (label_col && c == *label_col) {
        if (cells[c].empty())
          throw ParseError(path + ": row " + std::to_string(line_no) +
                           " has an empty label");
        label_tokens.push_back(cells[c]);
        continue;
      }
      if (cells[c].empty()) {
        values.push_back(kMissing);
        continue;
      }
      const char* begin = cells[c].c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin || *end != '\0')
        throw ParseError(path + ": row " + std::to_string(line_no) +
                         ", column " + std::to_string(c + 1) +
                         ": non-numeric cell '" + cells[c] + "'");
      values.push_back(v);
    }
    ++n_rows;
  }
  if (n_rows == 0) throw ParseError("CSV has no data rows: " + path);
  ds.X = Tensor::from({n_rows, ds.feature_names.size()}, std::move(values));

  if (label_col) {
    ds.labels.reserve(n_rows);
    for (const std::string& tok : label_tokens) {
      std::size_t idx = ds.class_names.size();
      for (std::size_t k = 0; k < ds.class_names.size(); ++k)
        if (ds.class_names[k] == tok) idx = k;
      if (idx == ds.class_names.size()) ds.class_names.push_back(tok);
      ds.labels.push_back(static_cast<int>(idx));
    }
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open CSV for writing: " + path);
  for (std::size_t c = 0; c < ds.feature_names.size(); ++c)
    os << (c ? "," : "") << ds.feature_names[c];
  if (ds.has_labels()) os << ",label";
  os << "\n";
  for (std::size_t r = 0; r < ds.n(); ++r) {
    for (std::size_t c = 0; c < ds.d(); ++c) {
      if (c) os << ",";
      const double v = ds.X.at(r, c);
      if (!is_missing(v)) os << fmt_double(v);
    }
    if (ds.has_labels()) os << "," << ds.class_names[ds.labels[r]];
    os << "\n";
  }
  if (!os) throw ParseError("failed writing CSV: " + path);
}

namespace {

std::vector<double> global_feature_means(const Dataset& ds) {
  std::vector<double> mean(ds.d(), 0.0);
  for (std::size_t j = 0; j < ds.d(); ++j) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < ds.n(); ++r) {
      const double v = ds.X.at(r, j);
      if (!is_missing(v)) {
        acc += v;
        ++cnt;
      }
    }
    if (cnt == 0)
      throw ConfigError("feature " + std::to_string(j) +
                        " has no observed values at all");
    mean[j] = acc / static_cast<double>(cnt);
  }
  return mean;
}

}  // namespace

Dataset impute_global_mean(Dataset ds) {
  if (ds.missing_count() == 0) return ds;
  const std::vector<double> mean = global_feature_means(ds);
  for (std::size_t r = 0; r < ds.n(); ++r)
    for (std::size_t j = 0; j < ds.d(); ++j)
      if (is_missing(ds.X.at(r, j))) ds.X.at(r, j) = mean[j];
  return ds;
}

Dataset impute_class_mean(Dataset ds) {
  if (ds.missing_count() == 0) return ds;
  if (!ds.has_labels())
    throw ConfigError(
        "class-mean imputation needs labels; use global-mean imputation for "
        "unlabeled data");
  const std::size_t classes = ds.num_classes();
  const std::vector<double> global = global_feature_means(ds);
  // per (class, feature): sum and count of observed cells
  std::vector<double> sum(classes * ds.d(), 0.0);
  std::vector<std::size_t> cnt(classes * ds.d(), 0);
  for (std::size_t r = 0; r < ds.n(); ++r) {
    const std::size_t c = static_cast<std::size_t>(ds.labels[r]);
    for (std::size_t j = 0; j < ds.d(); ++j) {
      const double v = ds.X.at(r, j);
      if (!is_missing(v)) {
        sum[c * ds.d() + j] += v;
        cnt[c * ds.d() + j] += 1;
      }
    }
  }
  bool warned = false;
  for (std::size_t r = 0; r < ds.n(); ++r) {
    const std::size_t c = static_cast<std::size_t>(ds.labels[r]);
    for (std::size_t j = 0; j < ds.d(); ++j) {
      if (!is_missing(ds.X.at(r, j))) continue;
      const std::size_t idx = c * ds.d() + j;
      if (cnt[idx] > 0) {
        ds.X.at(r, j) = sum[idx] / static_cast<double>(cnt[idx]);
      } else {
        if (!warned) {
          std::cerr << "warning: class " << ds.class_names[c] << ", feature "
                    << j
                    << " has no observed values; falling back to the global "
                       "feature mean\n";
          warned = true;
        }
        ds.X.at(r, j) = global[j];
      }
    }
  }
  return ds;
}

Dataset minmax_scale(Dataset ds) {
  if (ds.split.size() != ds.n())
    throw ConfigError("assign splits before min-max scaling");
  if (ds.missing_count() != 0)
    throw ConfigError("impute missing values before min-max scaling");
  const std::vector<std::size_t> train_rows = ds.rows_of(Split::kTrain);
  if (train_rows.empty()) throw ConfigError("training split is empty");
  for (std::size_t j = 0; j < ds.d(); ++j) {
    double lo = ds.X.at(train_rows[0], j), hi = lo;
    for (std::size_t r : train_rows) {
      const double v = ds.X.at(r, j);
      lo = v < lo ? v : lo;
      hi = v > hi ? v : hi;
    }
    if (hi == lo) {
      for (std::size_t r = 0; r < ds.n(); ++r) ds.X.at(r, j) = 0.0;
      continue;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t r = 0; r < ds.n(); ++r)
      ds.X.at(r, j) = (ds.X.at(r, j) - lo) * inv;
  }
  return ds;
}

namespace {

void assign_group(const std::vector<std::size_t>& rows, double train_frac,
                  double val_frac, std::vector<Split>& out) {
  const double n = static_cast<double>(rows.size());
  const std::size_t n_train =
      static_cast<std::size_t>(train_frac * n + 0.5);
  std::size_t n_val = static_cast<std::size_t>(val_frac * n + 0.5);
  if (n_train + n_val > rows.size()) n_val = rows.size() - n_train;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i < n_train)
      out[rows[i]] = Split::kTrain;
    else if (i < n_train + n_val)
      out[rows[i]] = Split::kVal;
    else
      out[rows[i]] = Split::kTest;
  }
}

}  // namespace

void assign_splits(Dataset& ds, std::uint64_t seed, double train_frac,
                   double val_frac) {
  if (!(train_frac > 0.0) || val_frac < 0.0 || train_frac + val_frac >= 1.0)
    throw ConfigError("split fractions must satisfy 0 < train, 0 <= val, "
                      "train + val < 1");
  Rng rng(seed, Rng::kSplit);
  ds.split.assign(ds.n(), Split::kTest);
  if (ds.has_labels()) {
    // Stratified: shuffle and cut each class independently so small classes
    // stay represented in every split.
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < ds.n(); ++r)
        if (static_cast<std::size_t>(ds.labels[r]) == c) rows.push_back(r);
      shuffle_indices(rows, rng);
      assign_group(rows, train_frac, val_frac, ds.split);
    }
  } else {
    std::vector<std::size_t> rows(ds.n());
    std::iota(rows.begin(), rows.end(), 0);
    shuffle_indices(rows, rng);
    assign_group(rows, train_frac, val_frac, ds.split);
  }
}

void SyntheticSpec::validate() const {
  if (n == 0 || d == 0 || k_true == 0)
    throw ConfigError("synthetic spec requires n, d, k_true >= 1");
  if (k_true > d)
    throw ConfigError("synthetic spec: k_true exceeds feature count");
  if (!planted.empty()) {
    if (planted.size() != k_true)
      throw ConfigError("synthetic spec: planted set size differs from k_true");
    std::vector<std::size_t> sorted = planted;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] >= d)
        throw ConfigError("synthetic spec: planted index out of range");
      if (i > 0 && sorted[i] == sorted[i - 1])
        throw ConfigError("synthetic spec: planted indices must be distinct");
    }
  }
  if (!(sigma >= 0.0)) throw ConfigError("synthetic spec: sigma must be >= 0");
  if (task == Task::kClassification) {
    if (classes < 2)
      throw ConfigError("synthetic classification needs >= 2 classes");
    if (k_true < 64 && classes > (std::size_t{1} << k_true))
      throw ConfigError("synthetic classification needs classes <= 2^k_true");
    if (separation < 3.0)
      throw ConfigError("synthetic spec: class separation below 3 sigma");
  }
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, Rng::kSynth);

  std::vector<std::size_t> planted = spec.planted;
  if (planted.empty()) {
    std::vector<std::size_t> all(spec.d);
    std::iota(all.begin(), all.end(), 0);
    shuffle_indices(all, rng);
    planted.assign(all.begin(),
                   all.begin() + static_cast<std::ptrdiff_t>(spec.k_true));
    std::sort(planted.begin(), planted.end());
  }
  std::vector<std::size_t> rest;
  {
    std::vector<bool> used(spec.d, false);
    for (std::size_t j : planted) used[j] = true;
    for (std::size_t j = 0; j < spec.d; ++j)
      if (!used[j]) rest.push_back(j);
  }

  Dataset ds;
  ds.planted = planted;
  ds.X = Tensor::zeros({spec.n, spec.d});
  for (std::size_t j = 0; j < spec.d; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));

  if (spec.task == Task::kClassification) {
    ds.labels.resize(spec.n);
    for (std::size_t c = 0; c < spec.classes; ++c)
      ds.class_names.push_back("c" + std::to_string(c));
    for (std::size_t r = 0; r < spec.n; ++r)
      ds.labels[r] = static_cast<int>(r % spec.classes);
    // Noiseless data keeps a unit amplitude so classes stay distinct.
    const double amplitude =
        spec.separation * (spec.sigma > 0.0 ? spec.sigma : 1.0);
    // planted feature t carries bit t of the class code
    for (std::size_t t = 0; t < spec.k_true; ++t) {
      const std::size_t j = planted[t];
      for (std::size_t r = 0; r < spec.n; ++r) {
        const std::size_t c = static_cast<std::size_t>(ds.labels[r]);
        const double bit = static_cast<double>((c >> t) & 1u);
        ds.X.at(r, j) = amplitude * bit + spec.sigma * rng.gaussian();
      }
    }
    for (std::size_t j : rest)
      for (std::size_t r = 0; r < spec.n; ++r)
        ds.X.at(r, j) = rng.gaussian();
    return ds;
  }

  // Reconstruction: planted columns are the signals, the rest are fixed
  // linear mixtures of them plus noise.
  Tensor z = Tensor::zeros({spec.n, spec.k_true});
  for (std::size_t i = 0; i < z.size(); ++i) z.at(i) = rng.uniform();
  for (std::size_t t = 0; t < spec.k_true; ++t)
    for (std::size_t r = 0; r < spec.n; ++r)
      ds.X.at(r, planted[t]) = z.at(r, t);
  for (std::size_t j : rest) {
    std::vector<double> coeff(spec.k_true);
    for (double& a : coeff) a = rng.uniform(-1.0, 1.0);
    for (std::size_t r = 0; r < spec.n; ++r) {
      double acc = 0.0;
      for (std::size_t t = 0; t < spec.k_true; ++t)
        acc += coeff[t] * z.at(r, t);
      ds.X.at(r, j) = acc + spec.sigma * rng.gaussian();
    }
  }
  return ds;
}

}  // namespace ipcae
