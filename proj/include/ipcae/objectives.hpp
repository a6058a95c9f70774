#pragma once

#include <cstddef>
#include <vector>

#include "ipcae/autodiff.hpp"
#include "ipcae/tensor.hpp"

namespace ipcae {

enum class Task { kReconstruction, kClassification };

/// Mean squared error over all entries of pred - target.
Var mse(Tape& tape, Var pred, Var target);

/// Mean over the batch of logsumexp(logits_row) - logits_row[label],
/// max-shifted so huge logits do not overflow.
Var cross_entropy(Tape& tape, Var logits, const std::vector<int>& labels);

/// Generalized Jensen-Shannon divergence of the K row distributions
/// p_i = softmax(logits_i) under equal weights 1/K, computed through the
/// entropy decomposition H(mean_i p_i) - mean_i H(p_i). Probabilities are
/// clamped at 1e-12 inside the logarithms only, so near-one-hot rows late in
/// annealing stay finite.
Var gjsd(Tape& tape, Var logits);

/// task_loss - lambda * gjsd(logits). The divergence is subtracted: the
/// regularizer rewards diverse selector rows. lambda = 0 returns task_loss
/// untouched.
Var regularized_loss(Tape& tape, Var task_loss, Var logits, double lambda);

/// Plain-value counterparts used for logging and evaluation.
double gjsd_value(const Tensor& logits);
double mse_value(const Tensor& pred, const Tensor& target);
double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels);

/// ||x - xhat||_F / d over the full evaluation matrix.
double normalized_frobenius(const Tensor& x, const Tensor& xhat, std::size_t d);

/// Percent of rows whose argmax matches the label.
double top1_accuracy(const Tensor& logits, const std::vector<int>& labels);

Tensor one_hot_labels(const std::vector<int>& labels, std::size_t classes);

inline constexpr double kProbFloor = 1e-12;

}  // namespace ipcae
