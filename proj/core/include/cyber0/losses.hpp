#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyber0/data.hpp"
#include "cyber0/param_vector.hpp"
#include "cyber0/seedstream.hpp"

namespace cyber0 {

/// A differentiable loss f(w; batch).
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::size_t dimension() const = 0;
  virtual double eval(std::span<const double> w, const Batch& batch) const = 0;
  virtual ParamVector grad(std::span<const double> w, const Batch& batch) const = 0;

  /// True when the loss ignores the batch (every sample gives the same loss).
  virtual bool batch_free() const { return false; }

  /// plus[r] = f(w + mu z_r; batch), minus[r] = f(w - mu z_r; batch) for every
  /// row of dirs. The default materialises each perturbed point; models may
  /// override with an algebraically equivalent shortcut.
  virtual void eval_pairs(std::span<const double> w, double mu, const DirectionBlock& dirs,
                          const Batch& batch, std::span<double> plus, std::span<double> minus) const;

 protected:
  void check_dimension(std::span<const double> w) const;
};

/// Precomputed design matrix (features plus a trailing constant-1 column).
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(const Dataset& data, std::span<const std::size_t> rows);
  explicit DesignMatrix(const Dataset& data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// Multinomial logistic regression: d = (features + 1) * classes, weights laid
/// out class-major with the bias as the last entry of each class row. The
/// loss is the mean softmax cross-entropy over the batch.
class LogisticRegression final : public LossModel {
 public:
  LogisticRegression(std::size_t features, std::size_t classes);

  std::size_t dimension() const override { return (features_ + 1) * classes_; }
  std::size_t features() const noexcept { return features_; }
  std::size_t classes() const noexcept { return classes_; }

  double eval(std::span<const double> w, const Batch& batch) const override;
  ParamVector grad(std::span<const double> w, const Batch& batch) const override;
  void eval_pairs(std::span<const double> w, double mu, const DirectionBlock& dirs, const Batch& batch,
                  std::span<double> plus, std::span<double> minus) const override;

  /// Fraction of rows whose arg-max logit equals the label (ties go to the lowest class).
  double accuracy(std::span<const double> w, const DesignMatrix& design) const;
  double mean_loss(std::span<const double> w, const DesignMatrix& design) const;

 private:
  void check_batch(const Batch& batch) const;

  std::size_t features_;
  std::size_t classes_;
};

/// F(w) = (lambda / 2) * ||w - w*||^2, independent of data.
class Quadratic final : public LossModel {
 public:
  Quadratic(double curvature, ParamVector optimum);

  std::size_t dimension() const override { return optimum_.size(); }
  double curvature() const noexcept { return curvature_; }
  const ParamVector& optimum() const noexcept { return optimum_; }

  double eval(std::span<const double> w, const Batch& batch) const override;
  double eval(std::span<const double> w) const;
  ParamVector grad(std::span<const double> w, const Batch& batch) const override;
  ParamVector grad(std::span<const double> w) const;
  bool batch_free() const override { return true; }

  double distance(std::span<const double> w) const;

 private:
  double curvature_;
  ParamVector optimum_;
};

}  // namespace cyber0
