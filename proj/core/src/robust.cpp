#include "cyber0/robust.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cyber0 {

namespace {

// Sorts the scratch column in place and averages the survivors.
double trimmed_mean_sorted(std::vector<double>& column, std::size_t drop) {
  for (double v : column) {
    if (std::isnan(v)) throw std::invalid_argument("trimmed mean: NaN input");
  }
  std::sort(column.begin(), column.end());
  double sum = 0.0;
  for (std::size_t i = drop; i < column.size() - drop; ++i) sum += column[i];
  return sum / static_cast<double>(column.size() - 2 * drop);
}

}  // namespace

std::size_t trim_count(double beta, std::size_t m) {
  return static_cast<std::size_t>(std::floor(beta * static_cast<double>(m)));
}

void validate_trim(double beta, std::size_t m) {
  if (!(beta >= 0.0) || !(beta < 0.5)) {
    throw std::invalid_argument("trimmed mean: beta must lie in [0, 1/2), got " + std::to_string(beta));
  }
  if (m == 0) throw std::invalid_argument("trimmed mean: empty multiset");
  if (m < 2 * trim_count(beta, m) + 1) throw std::invalid_argument("trimmed mean: no survivors after trimming");
}

double trimmed_mean(std::span<const double> values, double beta) {
  validate_trim(beta, values.size());
  std::vector<double> column(values.begin(), values.end());
  return trimmed_mean_sorted(column, trim_count(beta, values.size()));
}

std::vector<double> robust_direction_aggregate(std::span<const ClientReport> reports, double beta) {
  const std::size_t m = reports.size();
  validate_trim(beta, m);
  const std::size_t width = reports.front().coefficients.size();
  for (const auto& rep : reports) {
    if (rep.coefficients.size() != width) {
      throw std::invalid_argument("aggregate: client " + std::to_string(rep.client) + " sent " +
                                  std::to_string(rep.coefficients.size()) + " coefficients, expected " +
                                  std::to_string(width));
    }
  }
  const std::size_t drop = trim_count(beta, m);
  std::vector<double> out(width);
  std::vector<double> column(m);
  for (std::size_t r = 0; r < width; ++r) {
    for (std::size_t i = 0; i < m; ++i) column[i] = reports[i].coefficients[r];
    out[r] = trimmed_mean_sorted(column, drop);
  }
  return out;
}

ParamVector coordwise_trimmed_mean(std::span<const ParamVector> grads, double beta) {
  const std::size_t m = grads.size();
  validate_trim(beta, m);
  const std::size_t d = grads.front().size();
  for (const auto& g : grads) {
    if (g.size() != d) throw std::invalid_argument("coordwise_trimmed_mean: length mismatch");
  }
  const std::size_t drop = trim_count(beta, m);
  ParamVector out(d);
  std::vector<double> column(m);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < m; ++i) column[i] = grads[i][j];
    out[j] = trimmed_mean_sorted(column, drop);
  }
  return out;
}

ParamVector mean_aggregate(std::span<const ParamVector> grads) {
  if (grads.empty()) throw std::invalid_argument("mean_aggregate: no inputs");
  return coordwise_trimmed_mean(grads, 0.0);
}

}  // namespace cyber0
