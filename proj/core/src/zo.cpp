#include "cyber0/zo.hpp"

#include <cmath>

namespace cyber0 {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DivergenceError(std::string(what) + " is not finite");
}

void require_finite(double v, const char* what, std::size_t r) {
  if (!std::isfinite(v)) throw DivergenceError("direction " + std::to_string(r) + ": " + what + " is not finite");
}

}  // namespace

void ZoConfig::validate() const {
  if (k == 0) throw std::invalid_argument("zo: k must be positive");
  if (mu_zero) {
    if (mu != 0.0) throw std::invalid_argument("zo: mu_zero requires mu = 0");
  } else if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("zo: mu must be positive unless mu_zero is set");
  }
}

double coefficient_scale(DirectionMode mode, std::size_t dim) noexcept {
  return mode == DirectionMode::Sphere ? static_cast<double>(dim) : 1.0;
}

double zo_coefficient(const LossModel& model, std::span<const double> w, const Batch& batch,
                      const ZoConfig& cfg, std::uint64_t seed) {
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("zo_coefficient: mu must be positive");
  std::vector<double> plus(w.size());
  std::vector<double> minus(w.size());
  perturb_pair(plus, minus, w, cfg.mu, seed, cfg.mode);
  const double lp = model.eval(plus, batch);
  const double lm = model.eval(minus, batch);
  require_finite(lp, "loss at w + mu z");
  require_finite(lm, "loss at w - mu z");
  const double c = coefficient_scale(cfg.mode, w.size()) * ((lp - lm) / (2.0 * cfg.mu));
  require_finite(c, "zero-order coefficient");
  return c;
}

double zo_coefficient_mu0(const LossModel& model, std::span<const double> w, const Batch& batch,
                          const ZoConfig& cfg, std::uint64_t seed) {
  const ParamVector g = model.grad(w, batch);
  const ParamVector z = direction(seed, w.size(), cfg.mode);
  const double c = coefficient_scale(cfg.mode, w.size()) * dot(g.span(), z.span());
  require_finite(c, "zero-order coefficient");
  return c;
}

std::vector<double> zo_coefficients(const LossModel& model, std::span<const double> w, const Batch& batch,
                                    const ZoConfig& cfg, const DirectionBlock& dirs) {
  const std::size_t count = dirs.count();
  const double scale = coefficient_scale(cfg.mode, w.size());
  std::vector<double> out(count);
  if (cfg.mu_zero) {
    const ParamVector g = model.grad(w, batch);
    for (std::size_t r = 0; r < count; ++r) {
      out[r] = scale * dot(g.span(), dirs.row(r));
      require_finite(out[r], "zero-order coefficient", r);
    }
    return out;
  }
  std::vector<double> plus(count);
  std::vector<double> minus(count);
  model.eval_pairs(w, cfg.mu, dirs, batch, plus, minus);
  for (std::size_t r = 0; r < count; ++r) {
    require_finite(plus[r], "loss at w + mu z", r);
    require_finite(minus[r], "loss at w - mu z", r);
    out[r] = scale * ((plus[r] - minus[r]) / (2.0 * cfg.mu));
    require_finite(out[r], "zero-order coefficient", r);
  }
  return out;
}

void apply_update(ParamVector& w, std::span<const double> coeffs, std::int64_t step, double eta,
                  const ZoConfig& cfg, std::uint64_t root, std::size_t epochs) {
  if (coeffs.size() != cfg.k * epochs) throw std::invalid_argument("apply_update: coefficient count mismatch");
  const auto k = static_cast<double>(cfg.k);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t r = 0; r < cfg.k; ++r) {
      const double c = coeffs[e * cfg.k + r];
      if (!std::isfinite(c)) throw std::invalid_argument("apply_update: non-finite coefficient");
      perturb_inplace(w, -eta * c / k, direction_seed(root, step, static_cast<std::int64_t>(r), static_cast<std::int64_t>(e)),
                      cfg.mode);
    }
  }
}

void apply_update(ParamVector& w, std::span<const double> coeffs, double eta, std::size_t k,
                  const DirectionBlock& dirs) {
  if (coeffs.size() != dirs.count() || dirs.dim != w.size()) {
    throw std::invalid_argument("apply_update: block shape mismatch");
  }
  const auto kd = static_cast<double>(k);
  for (std::size_t r = 0; r < coeffs.size(); ++r) {
    if (!std::isfinite(coeffs[r])) throw std::invalid_argument("apply_update: non-finite coefficient");
    const double scale = -eta * coeffs[r] / kd;
    if (scale == 0.0) continue;
    const auto z = dirs.row(r);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * z[i];
  }
}

std::vector<std::uint64_t> round_seeds(std::uint64_t root, std::int64_t step, std::size_t k, std::size_t epochs) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(k * epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t r = 0; r < k; ++r) {
      seeds.push_back(direction_seed(root, step, static_cast<std::int64_t>(r), static_cast<std::int64_t>(e)));
    }
  }
  return seeds;
}

}  // namespace cyber0
