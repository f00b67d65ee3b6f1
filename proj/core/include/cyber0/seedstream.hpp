#pragma once

// Shared-seed randomness. The federator and every client regenerate the same
// perturbation directions from a (root, step, sample, epoch, kind) tuple, so
// directions are never transmitted.
//
// Frozen stream identity (changing any of this changes every experiment):
//   derive_seed: h = 0; for word in (root, step, sample, epoch, kind):
//                  h = splitmix64_mix(h ^ word)
//   splitmix64_mix(x): z = x + 0x9E3779B97F4A7C15
//                      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                      z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                      return z ^ (z >> 31)
//   RngStream: xoshiro256** whose four state words are the first four outputs
//              of a SplitMix64 sequence started at the derived seed.
//   Uniform double: (next_u64() >> 11) * 2^-53, in [0, 1).
//   Gaussian: Marsaglia polar method on u, v = 2*uniform - 1, rejecting
//             s = u^2 + v^2 outside (0, 1); emits u*f first, then v*f.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cyber0/param_vector.hpp"

namespace cyber0 {

enum class StreamKind : std::uint64_t {
  Direction = 1,
  DataShuffle = 2,
  Init = 3,
  Adversary = 4,
};

struct SeedTuple {
  std::uint64_t root = 0;
  std::int64_t step = 0;
  std::int64_t sample = 0;
  std::int64_t epoch = 0;
  StreamKind kind = StreamKind::Direction;
};

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;
std::uint64_t derive_seed(const SeedTuple& tuple) noexcept;

inline std::uint64_t direction_seed(std::uint64_t root, std::int64_t step, std::int64_t sample,
                                    std::int64_t epoch = 0) noexcept {
  return derive_seed({root, step, sample, epoch, StreamKind::Direction});
}

/// xoshiro256** seeded through SplitMix64. Value type; copy to fork a stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() noexcept;
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
};

/// Standard normal draws via the polar method.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) noexcept : rng_(seed) {}

  double next() noexcept;
  void skip(std::size_t count) noexcept {
    for (std::size_t i = 0; i < count; ++i) next();
  }

 private:
  RngStream rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class DirectionMode {
  Gaussian,  // per-coordinate N(0, 1); coefficient is not rescaled
  Sphere,    // uniform on the unit sphere; coefficient carries a factor d
};

ParamVector gaussian_direction(std::uint64_t seed, std::size_t dim);
ParamVector sphere_direction(std::uint64_t seed, std::size_t dim);
ParamVector direction(std::uint64_t seed, std::size_t dim, DirectionMode mode);

/// Materialised directions for one round, row r holding z(seed_r). Row
/// contents are bit-identical to the streamed coordinates of the same seed.
struct DirectionBlock {
  std::size_t dim = 0;
  std::vector<double> z;

  std::size_t count() const noexcept { return dim == 0 ? 0 : z.size() / dim; }
  std::span<const double> row(std::size_t r) const { return {z.data() + r * dim, dim}; }
};

DirectionBlock make_direction_block(std::span<const std::uint64_t> seeds, std::size_t dim,
                                    DirectionMode mode);

/// w += scale * z(seed). Gaussian mode streams coordinates without
/// materialising z; Sphere mode makes one pass for the normaliser and a second
/// seeded replay pass for the update.
void perturb_inplace(std::span<double> w, double scale, std::uint64_t seed, DirectionMode mode);
inline void perturb_inplace(ParamVector& w, double scale, std::uint64_t seed, DirectionMode mode) {
  perturb_inplace(w.span(), scale, seed, mode);
}

/// out = base + scale * z(seed), same coordinate stream as perturb_inplace.
void perturb_into(std::span<double> out, std::span<const double> base, double scale,
                  std::uint64_t seed, DirectionMode mode);

/// Writes base + scale*z into plus and base - scale*z into minus with a single
/// pass over the direction stream.
void perturb_pair(std::span<double> plus, std::span<double> minus, std::span<const double> base,
                  double scale, std::uint64_t seed, DirectionMode mode);

}  // namespace cyber0
