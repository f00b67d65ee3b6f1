#pragma once

// Monte-Carlo and analytic checks of the sphere-sampling identities and of
// the convergence behaviour on the quadratic model.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cyber0/config.hpp"
#include "cyber0/param_vector.hpp"

namespace cyber0 {

struct TheoryParams {
  double lambda = 1.0;
  double smoothness = 1.0;  // L_F; equals lambda on the quadratic model
  std::size_t d = 1;
  std::size_t k = 1;
  bool mu_zero = true;

  /// (d + k - 1) / k when mu = 0, (2d + (k - 1)(1 + sqrt d)) / k otherwise.
  double tau() const;
  /// 1 / (tau L_F) when mu = 0, 1 / (2 tau L_F) otherwise.
  double eta() const;
  /// Per-step factor 1 - lambda / (tau (L_F + lambda)).
  double rate_bound() const;
};

/// Estimate of a Monte-Carlo or analytic quantity with its acceptance band.
struct CheckReport {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // of the mean
  std::size_t samples = 0;
};

/// Max |(1/N) sum z z^T - I/d| over entries, z uniform on the unit sphere.
double mc_isotropy(std::size_t d, std::size_t n, std::uint64_t seed);
/// Max over i of |d * ((1/N) sum z_i^2) - 1|: relative error of the diagonal against 1/d.
double mc_isotropy_diagonal(std::size_t d, std::size_t n, std::uint64_t seed);

/// E||(1/k) sum_r d <x, z_r> z_r||^2 / ||x||^2 over N draws of k sphere directions.
McEstimate mc_norm_factor(std::size_t d, std::size_t k, std::size_t n, std::span<const double> x,
                          std::uint64_t seed);

/// E[|z1^T z2| (x^T z1)^2] over N independent sphere pairs.
McEstimate mc_cross_abs_bound(std::size_t d, std::size_t n, std::span<const double> x, std::uint64_t seed);

struct GapEstimate {
  McEstimate gap;         // F_mu(w) - F(w)
  double expected = 0.0;  // lambda mu^2 / 2
  double deviation = 0.0; // |gap - expected|
};

/// Monte-Carlo F_mu(w) - F(w) for F = lambda/2 ||w - w*||^2 at a w whose
/// offset from w* is a unit vector drawn from `seed`.
GapEstimate smoothed_gap_quadratic(double lambda, double mu, std::size_t d, std::size_t n, std::uint64_t seed);

struct ContractionResult {
  double rate = 0.0;                   // fitted per-step factor of the mean distance
  double floor = 0.0;                  // mean distance over the last `tail` steps
  std::vector<double> mean_distance;   // steps 0..T
};

/// Runs `seeds` copies of a quadratic-model config (seed, seed+1, ...) and
/// fits exp(slope) of log mean distance against the step over the steps
/// whose mean distance is above 1e-12 of the start.
ContractionResult contraction_rate(const ExperimentConfig& cfg, std::size_t seeds, std::size_t tail = 100);

/// Fits exp(slope) of log(values[t]) on t for t in [first, last].
double fit_geometric_rate(std::span<const double> values, std::size_t first, std::size_t last);

/// Quadratic config of the convergence checks: Sphere directions, no attack.
ExperimentConfig theorem_config(std::size_t d, std::size_t k, double mu, std::size_t steps);

std::vector<CheckReport> lemma_checks(std::uint64_t seed = 1);
std::vector<CheckReport> theorem_checks(std::uint64_t seed = 1);

/// Fixed-width pass/fail table, one row per report.
std::string format_reports(const std::vector<CheckReport>& reports);

}  // namespace cyber0
