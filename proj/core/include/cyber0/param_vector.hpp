#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace cyber0 {

/// Dense model parameter vector. The length is fixed at construction.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : entries_(dim, fill) {}
  ParamVector(std::initializer_list<double> values) : entries_(values) {}
  explicit ParamVector(std::vector<double> values) : entries_(std::move(values)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator[](std::size_t i) noexcept { return entries_[i]; }
  double operator[](std::size_t i) const noexcept { return entries_[i]; }

  double* data() noexcept { return entries_.data(); }
  const double* data() const noexcept { return entries_.data(); }

  std::span<double> span() noexcept { return entries_; }
  std::span<const double> span() const noexcept { return entries_; }

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  const std::vector<double>& values() const noexcept { return entries_; }

  /// Bitwise equality. Distinguishes -0.0 from 0.0 and compares NaN payloads.
  bool bit_equal(const ParamVector& other) const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> entries_;
};

/// Training state owned by one replica: parameters plus the completed-round count.
struct ModelState {
  ParamVector w;
  std::uint64_t step = 0;

  void advance() noexcept { ++step; }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
bool all_finite(std::span<const double> a) noexcept;

/// Euclidean projection onto the L2 ball of the given radius centred at the origin.
/// Throws std::invalid_argument for a non-positive radius or non-finite input.
ParamVector project_ball(const ParamVector& w, double radius);

/// Returns w + scale * v. Throws std::invalid_argument on length mismatch.
ParamVector axpy(const ParamVector& w, double scale, const ParamVector& v);

/// In-place w += scale * v.
void axpy_inplace(ParamVector& w, double scale, std::span<const double> v);

}  // namespace cyber0
