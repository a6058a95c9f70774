#include "ipcae/objectives.hpp"

#include <cmath>
#include <string>

#include "ipcae/concrete.hpp"
#include "ipcae/errors.hpp"

namespace ipcae {

Var mse(Tape& tape, Var pred, Var target) {
  Var diff = tape.sub(pred, target);
  return tape.mean(tape.mul(diff, diff));
}

Tensor one_hot_labels(const std::vector<int>& labels, std::size_t classes) {
  Tensor y = Tensor::zeros({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
      throw ConfigError("label " + std::to_string(labels[i]) +
                        " out of range [0, " + std::to_string(classes) + ")");
    y.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

Var cross_entropy(Tape& tape, Var logits, const std::vector<int>& labels) {
  // copy the dims up front: tape references go stale as nodes are appended
  const std::size_t batch = tape.value(logits).rows();
  const std::size_t classes = tape.value(logits).cols();
  if (tape.value(logits).rank() != 2 || batch != labels.size())
    throw ShapeError("cross_entropy: logits " +
                     tape.value(logits).shape_str() + " do not match " +
                     std::to_string(labels.size()) + " labels");
  Var lse = tape.logsumexp(logits, 1);
  Var picked = tape.sum_axis(
      tape.mul(logits, tape.constant(one_hot_labels(labels, classes))), 1);
  return tape.mean(tape.sub(lse, picked));
}

Var gjsd(Tape& tape, Var logits) {
  const double inv_k = 1.0 / static_cast<double>(tape.value(logits).rows());
  Var p = tape.softmax(logits, 1);
  Var pbar = tape.scale(tape.sum_axis(p, 0), inv_k);
  // sum p log p = -H; the divergence is mean_i(-H(p_i)) - (-H(pbar)).
  Var neg_h_mean =
      tape.scale(tape.sum(tape.mul(p, tape.log_clamped(p, kProbFloor))), inv_k);
  Var neg_h_bar =
      tape.sum(tape.mul(pbar, tape.log_clamped(pbar, kProbFloor)));
  return tape.sub(neg_h_mean, neg_h_bar);
}

Var regularized_loss(Tape& tape, Var task_loss, Var logits, double lambda) {
  if (lambda < 0.0) throw ConfigError("gjsd lambda must be >= 0");
  if (lambda == 0.0) return task_loss;
  return tape.sub(task_loss, tape.scale(gjsd(tape, logits), lambda));
}

double gjsd_value(const Tensor& logits) {
  Tape tape;
  return tape.value(gjsd(tape, tape.constant(logits))).at(0);
}

double mse_value(const Tensor& pred, const Tensor& target) {
  Tape tape;
  return tape.value(mse(tape, tape.constant(pred), tape.constant(target)))
      .at(0);
}

double cross_entropy_value(const Tensor& logits,
                           const std::vector<int>& labels) {
  Tape tape;
  return tape.value(cross_entropy(tape, tape.constant(logits), labels)).at(0);
}

double normalized_frobenius(const Tensor& x, const Tensor& xhat,
                            std::size_t d) {
  if (!x.same_shape(xhat))
    throw ShapeError("normalized_frobenius: shape mismatch " + x.shape_str() +
                     " vs " + xhat.shape_str());
  return tensor::frobenius(tensor::sub(x, xhat)) / static_cast<double>(d);
}

double top1_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rows() != labels.size())
    throw ShapeError("top1_accuracy: row count does not match label count");
  const std::vector<std::size_t> pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == static_cast<std::size_t>(labels[i])) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace ipcae
