#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipcae/objectives.hpp"
#include "ipcae/tensor.hpp"

namespace ipcae {

enum class Split { kTrain, kVal, kTest };

Split split_from_name(const std::string& name);
std::string split_name(Split s);

/// In-memory dataset: an [N x D] feature matrix, optional dense class labels,
/// and a per-row split assignment. Missing cells are held as NaN until
/// imputation; every public consumer beyond the imputers requires a complete
/// matrix.
struct Dataset {
  Tensor X;
  std::vector<int> labels;               ///< empty for unlabeled data
  std::vector<std::string> class_names;  ///< class index -> original token
  std::vector<std::string> feature_names;
  std::vector<Split> split;              ///< empty until assigned
  std::vector<std::size_t> planted;      ///< synthetic ground truth S*

  std::size_t n() const { return X.rank() == 2 ? X.dim(0) : 0; }
  std::size_t d() const { return X.rank() == 2 ? X.dim(1) : 0; }
  bool has_labels() const { return !labels.empty(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::size_t missing_count() const;

  std::vector<std::size_t> rows_of(Split s) const;
  Tensor matrix_of(Split s) const;
  std::vector<int> labels_of(Split s) const;
};

/// Reads a rectangular CSV with a header row. Cells are decimal numbers or
/// empty (missing). The label column, when selected by name or index, is
/// tokenized and mapped to dense class indices in first-appearance order.
Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_name,
                 std::optional<std::size_t> label_index);

/// Writes features (and a final label column when present). Finite values
/// round-trip exactly; missing cells are written empty.
void write_csv(const Dataset& ds, const std::string& path);

/// Replaces each missing cell with the mean of observed values of that
/// feature within the same class; falls back to the global feature mean when
/// a (class, feature) pair has no observations.
Dataset impute_class_mean(Dataset ds);

/// Replaces each missing cell with the global feature mean.
Dataset impute_global_mean(Dataset ds);

/// Min-max scales every feature using statistics of the training split only.
/// Constant training columns map to zero everywhere.
Dataset minmax_scale(Dataset ds);

/// Seeded shuffle split; stratified per class when labels are present.
void assign_splits(Dataset& ds, std::uint64_t seed, double train_frac,
                   double val_frac);

/// Synthetic data with a planted informative feature set.
///
/// Classification: class c carries a k_true-bit code; planted feature t has
/// mean amplitude*bit_t(c) plus sigma-scaled noise, remaining features are
/// independent unit noise. Classes are balanced. Requires classes <= 2^k_true.
///
/// Reconstruction: planted columns are independent uniform signals; every
/// other column is a fixed linear mixture of them plus sigma-scaled noise, so
/// selecting exactly the planted set suffices for near-noise-floor error.
struct SyntheticSpec {
  Task task = Task::kClassification;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t classes = 0;  ///< classification only
  std::size_t k_true = 0;
  std::vector<std::size_t> planted;  ///< optional; drawn from seed if empty
  double sigma = 1.0;
  /// Distance between class means per differing code bit, in units of sigma.
  /// Values below 3 are rejected.
  double separation = 6.0;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace ipcae
