#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyber0/param_vector.hpp"
#include "cyber0/zo.hpp"

namespace cyber0 {

/// Number of values dropped from each end: floor(beta * m).
std::size_t trim_count(double beta, std::size_t m);

/// Throws std::invalid_argument unless 0 <= beta < 1/2 and m - 2 floor(beta m) >= 1.
void validate_trim(double beta, std::size_t m);

/// Mean of the values left after removing the floor(beta m) smallest and
/// largest. Survivors are summed in ascending order.
double trimmed_mean(std::span<const double> values, double beta);

/// Per-direction trimmed mean over client reports: out[r] = TrMn over column r.
std::vector<double> robust_direction_aggregate(std::span<const ClientReport> reports, double beta);

/// Trimmed mean applied independently to every coordinate.
ParamVector coordwise_trimmed_mean(std::span<const ParamVector> grads, double beta);

/// Coordinate-wise arithmetic mean; each coordinate is summed in ascending
/// order so it coincides bit-for-bit with the beta = 0 trimmed mean.
ParamVector mean_aggregate(std::span<const ParamVector> grads);

}  // namespace cyber0
