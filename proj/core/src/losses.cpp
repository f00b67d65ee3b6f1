#include "cyber0/losses.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cyber0 {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Cross-entropy of one logit row against its label, written as
// (max - logit_y) + log(sum exp(l - max)) so the result is never negative.
template <class Row>
double cross_entropy(const Row& logits, int label) {
  const double top = logits.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < logits.size(); ++c) sum += std::exp(logits(c) - top);
  return (top - logits(label)) + std::log(sum);
}

RowMatrix batch_design(const Batch& batch, std::size_t features) {
  RowMatrix x(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(features + 1));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto row = batch.data->row(batch.rows[b]);
    for (std::size_t j = 0; j < features; ++j) x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = row[j];
    x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(features)) = 1.0;
  }
  return x;
}

}  // namespace

void LossModel::check_dimension(std::span<const double> w) const {
  if (w.size() != dimension()) {
    throw std::invalid_argument("loss: parameter length " + std::to_string(w.size()) + " != model dimension " +
                                std::to_string(dimension()));
  }
}

void LossModel::eval_pairs(std::span<const double> w, double mu, const DirectionBlock& dirs, const Batch& batch,
                           std::span<double> plus, std::span<double> minus) const {
  check_dimension(w);
  const std::size_t k = dirs.count();
  if (dirs.dim != w.size() || plus.size() != k || minus.size() != k) {
    throw std::invalid_argument("eval_pairs: shape mismatch");
  }
  std::vector<double> wp(w.size());
  std::vector<double> wm(w.size());
  for (std::size_t r = 0; r < k; ++r) {
    const auto z = dirs.row(r);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double step = mu * z[i];
      wp[i] = w[i] + step;
      wm[i] = w[i] - step;
    }
    plus[r] = eval(wp, batch);
    minus[r] = eval(wm, batch);
  }
}

DesignMatrix::DesignMatrix(const Dataset& data, std::span<const std::size_t> rows)
    : rows_(rows.size()), cols_(data.features + 1), values_(rows.size() * (data.features + 1)) {
  labels_.reserve(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const auto src = data.row(rows[b]);
    std::copy(src.begin(), src.end(), values_.begin() + static_cast<std::ptrdiff_t>(b * cols_));
    values_[b * cols_ + data.features] = 1.0;
    labels_.push_back(data.labels[rows[b]]);
  }
}

DesignMatrix::DesignMatrix(const Dataset& data) : rows_(data.rows), cols_(data.features + 1) {
  values_.resize(rows_ * cols_);
  for (std::size_t b = 0; b < rows_; ++b) {
    const auto src = data.row(b);
    std::copy(src.begin(), src.end(), values_.begin() + static_cast<std::ptrdiff_t>(b * cols_));
    values_[b * cols_ + data.features] = 1.0;
  }
  labels_ = data.labels;
}

LogisticRegression::LogisticRegression(std::size_t features, std::size_t classes)
    : features_(features), classes_(classes) {
  if (features == 0 || classes < 2) {
    throw std::invalid_argument("LogisticRegression: need features >= 1 and classes >= 2");
  }
}

void LogisticRegression::check_batch(const Batch& batch) const {
  if (batch.data == nullptr || batch.size() == 0) throw std::invalid_argument("logreg: empty batch");
  if (batch.data->features != features_) {
    throw std::invalid_argument("logreg: batch has " + std::to_string(batch.data->features) +
                                " features, model expects " + std::to_string(features_));
  }
  if (batch.labels.size() != batch.rows.size()) throw std::invalid_argument("logreg: label count mismatch");
  for (int l : batch.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes_) {
      throw std::invalid_argument("logreg: label " + std::to_string(l) + " out of range");
    }
  }
}

double LogisticRegression::eval(std::span<const double> w, const Batch& batch) const {
  check_dimension(w);
  check_batch(batch);
  const RowMatrix x = batch_design(batch, features_);
  const ConstRowMap weights(w.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(features_ + 1));
  const RowMatrix logits = x * weights.transpose();
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) total += cross_entropy(logits.row(b), batch.labels[static_cast<std::size_t>(b)]);
  return total / static_cast<double>(batch.size());
}

ParamVector LogisticRegression::grad(std::span<const double> w, const Batch& batch) const {
  check_dimension(w);
  check_batch(batch);
  const RowMatrix x = batch_design(batch, features_);
  const ConstRowMap weights(w.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(features_ + 1));
  RowMatrix probs = x * weights.transpose();
  for (Eigen::Index b = 0; b < probs.rows(); ++b) {
    const double top = probs.row(b).maxCoeff();
    probs.row(b) = (probs.row(b).array() - top).exp();
    probs.row(b) /= probs.row(b).sum();
    probs(b, batch.labels[static_cast<std::size_t>(b)]) -= 1.0;
  }
  ParamVector g(dimension());
  Eigen::Map<RowMatrix> gm(g.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(features_ + 1));
  gm.noalias() = probs.transpose() * x;
  gm /= static_cast<double>(batch.size());
  return g;
}

void LogisticRegression::eval_pairs(std::span<const double> w, double mu, const DirectionBlock& dirs,
                                    const Batch& batch, std::span<double> plus, std::span<double> minus) const {
  check_dimension(w);
  check_batch(batch);
  const std::size_t k = dirs.count();
  if (dirs.dim != w.size() || plus.size() != k || minus.size() != k) {
    throw std::invalid_argument("eval_pairs: shape mismatch");
  }
  // Logits are linear in w: x (w +- mu z)^T = x w^T +- mu x z^T.
  const auto cols = static_cast<Eigen::Index>(features_ + 1);
  const auto classes = static_cast<Eigen::Index>(classes_);
  const RowMatrix x = batch_design(batch, features_);
  const ConstRowMap weights(w.data(), classes, cols);
  const RowMatrix base = x * weights.transpose();
  const ConstRowMap zs(dirs.z.data(), static_cast<Eigen::Index>(k) * classes, cols);
  const RowMatrix shifts = x * zs.transpose();

  Eigen::RowVectorXd lp(classes);
  Eigen::RowVectorXd lm(classes);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t r = 0; r < k; ++r) {
    double sp = 0.0;
    double sm = 0.0;
    for (Eigen::Index b = 0; b < base.rows(); ++b) {
      const auto delta = shifts.row(b).segment(static_cast<Eigen::Index>(r) * classes, classes);
      lp = base.row(b) + mu * delta;
      lm = base.row(b) - mu * delta;
      const int label = batch.labels[static_cast<std::size_t>(b)];
      sp += cross_entropy(lp, label);
      sm += cross_entropy(lm, label);
    }
    plus[r] = sp * inv_b;
    minus[r] = sm * inv_b;
  }
}

double LogisticRegression::accuracy(std::span<const double> w, const DesignMatrix& design) const {
  check_dimension(w);
  if (design.cols() != features_ + 1) throw std::invalid_argument("accuracy: design width mismatch");
  if (design.rows() == 0) return 0.0;
  const ConstRowMap x(design.values().data(), static_cast<Eigen::Index>(design.rows()),
                      static_cast<Eigen::Index>(design.cols()));
  const ConstRowMap weights(w.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(features_ + 1));
  const RowMatrix logits = x * weights.transpose();
  std::size_t hits = 0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    Eigen::Index best = 0;
    logits.row(b).maxCoeff(&best);
    if (best == design.labels()[static_cast<std::size_t>(b)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(design.rows());
}

double LogisticRegression::mean_loss(std::span<const double> w, const DesignMatrix& design) const {
  check_dimension(w);
  if (design.rows() == 0) throw std::invalid_argument("mean_loss: empty design");
  const ConstRowMap x(design.values().data(), static_cast<Eigen::Index>(design.rows()),
                      static_cast<Eigen::Index>(design.cols()));
  const ConstRowMap weights(w.data(), static_cast<Eigen::Index>(classes_), static_cast<Eigen::Index>(features_ + 1));
  const RowMatrix logits = x * weights.transpose();
  double total = 0.0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) total += cross_entropy(logits.row(b), design.labels()[static_cast<std::size_t>(b)]);
  return total / static_cast<double>(design.rows());
}

Quadratic::Quadratic(double curvature, ParamVector optimum) : curvature_(curvature), optimum_(std::move(optimum)) {
  if (!(curvature > 0.0) || !std::isfinite(curvature)) throw std::invalid_argument("Quadratic: curvature must be positive");
  if (optimum_.empty()) throw std::invalid_argument("Quadratic: empty optimum");
}

double Quadratic::eval(std::span<const double> w, const Batch&) const { return eval(w); }

double Quadratic::eval(std::span<const double> w) const {
  check_dimension(w);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w[i] - optimum_[i];
    acc += diff * diff;
  }
  return 0.5 * curvature_ * acc;
}

ParamVector Quadratic::grad(std::span<const double> w, const Batch&) const { return grad(w); }

ParamVector Quadratic::grad(std::span<const double> w) const {
  check_dimension(w);
  ParamVector g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = curvature_ * (w[i] - optimum_[i]);
  return g;
}

double Quadratic::distance(std::span<const double> w) const {
  check_dimension(w);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w[i] - optimum_[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace cyber0
