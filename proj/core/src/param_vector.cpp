#include "cyber0/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace cyber0 {

bool ParamVector::bit_equal(const ParamVector& other) const noexcept {
  if (entries_.size() != other.entries_.size()) return false;
  if (entries_.empty()) return true;
  return std::memcmp(entries_.data(), other.entries_.data(), entries_.size() * sizeof(double)) == 0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) {
  // Scaled accumulation so huge entries (1e300) do not overflow the sum of squares.
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::fabs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double x : a) {
    const double r = x / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

bool all_finite(std::span<const double> a) noexcept {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ParamVector project_ball(const ParamVector& w, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("project_ball: radius must be positive and finite");
  }
  if (!all_finite(w.span())) {
    throw std::invalid_argument("project_ball: non-finite parameter entry");
  }
  const double n = norm2(w.span());
  if (n <= radius) return w;
  ParamVector out(w.size());
  const double factor = radius / n;
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * factor;
  // Rounding in the rescale can leave the norm a few ulps above the radius,
  // which would break idempotence; shave until the result lies inside.
  while (norm2(out.span()) > radius) {
    for (double& x : out) x = std::nextafter(x, 0.0);
  }
  return out;
}

ParamVector axpy(const ParamVector& w, double scale, const ParamVector& v) {
  if (w.size() != v.size()) {
    throw std::invalid_argument("axpy: length mismatch " + std::to_string(w.size()) + " vs " +
                                std::to_string(v.size()));
  }
  ParamVector out(w);
  axpy_inplace(out, scale, v.span());
  return out;
}

void axpy_inplace(ParamVector& w, double scale, std::span<const double> v) {
  if (w.size() != v.size()) {
    throw std::invalid_argument("axpy: length mismatch " + std::to_string(w.size()) + " vs " +
                                std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) w[i] += scale * v[i];
}

}  // namespace cyber0
