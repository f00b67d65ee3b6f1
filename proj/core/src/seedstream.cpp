#include "cyber0/seedstream.hpp"

#include <cmath>
#include <stdexcept>

namespace cyber0 {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

// Replays the unit-sphere coordinate stream for one seed: g_i / ||g|| where g
// is the first all-nonzero block of dim Gaussian draws.
class SphereStream {
 public:
  SphereStream(std::uint64_t seed, std::size_t dim) : gauss_(seed) {
    GaussianStream probe(seed);
    std::size_t attempts = 0;
    for (;;) {
      double sumsq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double g = probe.next();
        sumsq += g * g;
      }
      if (sumsq > 0.0) {
        norm_ = std::sqrt(sumsq);
        break;
      }
      ++attempts;
    }
    gauss_.skip(attempts * dim);
  }

  double next() noexcept { return gauss_.next() / norm_; }

 private:
  GaussianStream gauss_;
  double norm_ = 1.0;
};

template <class Fn>
void for_each_coordinate(std::uint64_t seed, std::size_t dim, DirectionMode mode, Fn&& fn) {
  if (mode == DirectionMode::Gaussian) {
    GaussianStream gs(seed);
    for (std::size_t i = 0; i < dim; ++i) fn(i, gs.next());
  } else {
    SphereStream ss(seed, dim);
    for (std::size_t i = 0; i < dim; ++i) fn(i, ss.next());
  }
}

}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(const SeedTuple& tuple) noexcept {
  const std::uint64_t words[5] = {
      tuple.root,
      static_cast<std::uint64_t>(tuple.step),
      static_cast<std::uint64_t>(tuple.sample),
      static_cast<std::uint64_t>(tuple.epoch),
      static_cast<std::uint64_t>(tuple.kind),
  };
  std::uint64_t h = 0;
  for (std::uint64_t w : words) h = splitmix64_mix(h ^ w);
  return h;
}

RngStream::RngStream(std::uint64_t seed) noexcept {
  std::uint64_t sm = seed;
  for (auto& word : s_) {
    word = splitmix64_mix(sm);
    sm += 0x9E3779B97F4A7C15ULL;
  }
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::next_unit() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

__extension__ typedef unsigned __int128 u128;

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection; exact uniformity.
  u128 m = static_cast<u128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double GaussianStream::next() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * rng_.next_unit() - 1.0;
    v = 2.0 * rng_.next_unit() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

ParamVector gaussian_direction(std::uint64_t seed, std::size_t dim) {
  return direction(seed, dim, DirectionMode::Gaussian);
}

ParamVector sphere_direction(std::uint64_t seed, std::size_t dim) {
  return direction(seed, dim, DirectionMode::Sphere);
}

namespace {

// Single-pass fill; same draws and same division as SphereStream.
void fill_direction(std::span<double> out, std::uint64_t seed, DirectionMode mode) {
  GaussianStream gs(seed);
  if (mode == DirectionMode::Gaussian) {
    for (double& v : out) v = gs.next();
    return;
  }
  for (;;) {
    double sumsq = 0.0;
    for (double& v : out) {
      v = gs.next();
      sumsq += v * v;
    }
    if (sumsq > 0.0) {
      const double norm = std::sqrt(sumsq);
      for (double& v : out) v = v / norm;
      return;
    }
  }
}

}  // namespace

ParamVector direction(std::uint64_t seed, std::size_t dim, DirectionMode mode) {
  if (dim == 0) throw std::invalid_argument("direction: dimension must be positive");
  ParamVector z(dim);
  fill_direction(z.span(), seed, mode);
  return z;
}

DirectionBlock make_direction_block(std::span<const std::uint64_t> seeds, std::size_t dim,
                                    DirectionMode mode) {
  if (dim == 0) throw std::invalid_argument("make_direction_block: dimension must be positive");
  DirectionBlock block;
  block.dim = dim;
  block.z.resize(seeds.size() * dim);
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    fill_direction(std::span<double>(block.z.data() + r * dim, dim), seeds[r], mode);
  }
  return block;
}

void perturb_inplace(std::span<double> w, double scale, std::uint64_t seed, DirectionMode mode) {
  if (scale == 0.0 || w.empty()) return;
  for_each_coordinate(seed, w.size(), mode, [&](std::size_t i, double zi) { w[i] += scale * zi; });
}

void perturb_into(std::span<double> out, std::span<const double> base, double scale,
                  std::uint64_t seed, DirectionMode mode) {
  if (out.size() != base.size()) throw std::invalid_argument("perturb_into: length mismatch");
  if (base.empty()) return;
  for_each_coordinate(seed, base.size(), mode,
                      [&](std::size_t i, double zi) { out[i] = base[i] + scale * zi; });
}

void perturb_pair(std::span<double> plus, std::span<double> minus, std::span<const double> base,
                  double scale, std::uint64_t seed, DirectionMode mode) {
  if (plus.size() != base.size() || minus.size() != base.size()) {
    throw std::invalid_argument("perturb_pair: length mismatch");
  }
  if (base.empty()) return;
  for_each_coordinate(seed, base.size(), mode, [&](std::size_t i, double zi) {
    const double step = scale * zi;
    plus[i] = base[i] + step;
    minus[i] = base[i] - step;
  });
}

}  // namespace cyber0
