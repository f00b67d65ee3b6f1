#pragma once

// Experiment configuration and its flat text form:
//
//   # comment
//   clients = 12
//   attack = full_knowledge   # trailing comments are allowed
//
// Keys are the ExperimentConfig field names. Unknown keys, duplicate keys and
// malformed values are errors that carry a 1-based line and column.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cyber0/adversary.hpp"
#include "cyber0/seedstream.hpp"
#include "cyber0/zo.hpp"

namespace cyber0 {

enum class Algorithm { Cyber0, FedAvg, CoordwiseTm };
enum class Distribution { Iid, NonIid };
enum class ModelKind { Logistic, Quadratic };
enum class DataSource { Mnist, Synthetic };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(Distribution d) noexcept;
std::string_view to_string(ModelKind m) noexcept;
std::string_view to_string(DataSource s) noexcept;
std::string_view to_string(DirectionMode m) noexcept;

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Cyber0;
  std::size_t clients = 12;
  double byzantine_fraction = 0.25;
  double trim_fraction = 0.25;
  double mu = 0.001;
  std::size_t k = 64;
  double learning_rate = 0.01;
  std::size_t steps = 400;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 64;
  DirectionMode direction_mode = DirectionMode::Gaussian;
  bool mu_zero = false;
  AttackKind attack = AttackKind::None;
  Distribution distribution = Distribution::Iid;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 1;
  ModelKind model = ModelKind::Logistic;
  std::size_t eval_every = 10;

  DataSource data_source = DataSource::Mnist;
  std::string data_dir = "data/mnist";
  std::size_t synth_train = 6000;
  std::size_t synth_test = 1000;
  std::size_t synth_features = 20;
  std::size_t synth_classes = 10;

  // Quadratic model: w0 = 0 and w* at distance quad_start_distance along a
  // direction drawn from data_seed.
  std::size_t quad_dim = 16;
  double quad_curvature = 1.0;
  double quad_start_distance = 1.0;

  double projection_radius = 0.0;  // 0 disables projection
  bool verify_replicas = false;
  bool log_wall_time = false;

  bool operator==(const ExperimentConfig&) const = default;

  ZoConfig zo() const;
  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses the flat format on top of the defaults. Semantic validation
/// (validate()) is a separate step.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order; doubles use the shortest round-tripping form.
std::string serialize_config(const ExperimentConfig& cfg);

/// Sets one key from its textual value (as in a config line).
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// All accepted keys in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace cyber0
