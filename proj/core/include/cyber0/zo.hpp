#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cyber0/data.hpp"
#include "cyber0/losses.hpp"
#include "cyber0/param_vector.hpp"
#include "cyber0/seedstream.hpp"

namespace cyber0 {

struct ZoConfig {
  double mu = 1e-3;
  std::size_t k = 64;
  DirectionMode mode = DirectionMode::Gaussian;
  bool mu_zero = false;

  /// Throws std::invalid_argument unless exactly one of (mu > 0, mu_zero) holds and k >= 1.
  void validate() const;
};

/// Factor applied to the finite-difference quotient: d in Sphere mode, 1 in Gaussian mode.
double coefficient_scale(DirectionMode mode, std::size_t dim) noexcept;

/// The k (or E*k) scalars one client uploads in a round.
struct ClientReport {
  std::size_t client = 0;
  std::vector<double> coefficients;
};

/// Raised when a loss or coefficient becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// c * (f(w + mu z) - f(w - mu z)) / (2 mu) for z = z(seed). Signed. w is not
/// modified: both perturbed points are written into scratch storage.
double zo_coefficient(const LossModel& model, std::span<const double> w, const Batch& batch,
                      const ZoConfig& cfg, std::uint64_t seed);

/// c * <grad f(w; batch), z(seed)>.
double zo_coefficient_mu0(const LossModel& model, std::span<const double> w, const Batch& batch,
                          const ZoConfig& cfg, std::uint64_t seed);

/// One coefficient per row of dirs. In mu_zero mode a single gradient
/// serves every direction.
std::vector<double> zo_coefficients(const LossModel& model, std::span<const double> w, const Batch& batch,
                                    const ZoConfig& cfg, const DirectionBlock& dirs);

/// Seed-replay update: for e = 0..epochs-1, r = 0..k-1 in that order,
/// w += (-eta * coeffs[e*k + r] / k) * z(derive(root, step, r, e)).
void apply_update(ParamVector& w, std::span<const double> coeffs, std::int64_t step, double eta,
                  const ZoConfig& cfg, std::uint64_t root, std::size_t epochs = 1);

/// Same update from a materialised block whose rows are ordered (e, r).
void apply_update(ParamVector& w, std::span<const double> coeffs, double eta, std::size_t k,
                  const DirectionBlock& dirs);

/// Direction seeds of round `step` ordered (e, r).
std::vector<std::uint64_t> round_seeds(std::uint64_t root, std::int64_t step, std::size_t k,
                                       std::size_t epochs = 1);

}  // namespace cyber0
