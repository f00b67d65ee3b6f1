#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "cyber0/config.hpp"
#include "cyber0/data.hpp"
#include "cyber0/losses.hpp"
#include "cyber0/param_vector.hpp"

namespace cyber0 {

/// One CSV row. Counters are cumulative per client.
struct RoundLog {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;  // NaN for the quadratic model
  std::uint64_t uplink_scalars = 0;
  std::uint64_t downlink_scalars = 0;
  double wall_ms = 0.0;
};

struct CommCost {
  std::uint64_t uplink = 0;
  std::uint64_t downlink = 0;
};

/// Cumulative scalars per client after t steps. CyBeR-0: uplink t*E*k,
/// downlink 1 + d + t*E*k (seed and initial model once, then the aggregated
/// coefficients). First-order baselines: uplink t*d, downlink t*d.
CommCost comm_cost(const ExperimentConfig& cfg, std::size_t dim, std::uint64_t t);

/// Datasets and partition shared by every engine.
struct ExperimentData {
  Dataset train;
  Dataset test;
};

/// Loads MNIST from cfg.data_dir (CYBER0_MNIST_DIR overrides it when set) or
/// generates the synthetic set. Quadratic runs need no data.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// The MNIST directory that load_experiment_data would read.
std::filesystem::path resolve_mnist_dir(const ExperimentConfig& cfg);

struct EngineOptions {
  /// Parallel client workers; 0 means CYBER0_THREADS or the hardware count.
  std::size_t threads = 0;
  /// Called with the federator model after every step (and once for step 0).
  std::function<void(std::int64_t step, const ParamVector& w)> observer;
};

/// Worker count for parallel clients: CYBER0_THREADS if set and positive,
/// else std::thread::hardware_concurrency().
std::size_t default_thread_count();

/// The loss model and starting point a config describes.
std::unique_ptr<LossModel> make_model(const ExperimentConfig& cfg, const ExperimentData& data);
ParamVector initial_model(const ExperimentConfig& cfg, const LossModel& model);

std::vector<RoundLog> run_cyber0(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const EngineOptions& options = {});
/// Local-epoch variant; run_cyber0 is the E = 1 case of the same engine.
std::vector<RoundLog> run_cyber0_local_epochs(const ExperimentConfig& cfg, const ExperimentData& data,
                                              const EngineOptions& options = {});
std::vector<RoundLog> run_fedavg(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const EngineOptions& options = {});
std::vector<RoundLog> run_coordwise_tm(const ExperimentConfig& cfg, const ExperimentData& data,
                                       const EngineOptions& options = {});

/// Dispatches on cfg.algorithm.
std::vector<RoundLog> run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                     const EngineOptions& options = {});

inline constexpr const char* kLogHeader = "step,train_loss,test_acc,uplink_scalars,downlink_scalars,wall_ms";

/// Header plus one line per log. Doubles use the shortest round-trip form;
/// wall_ms is written as 0 unless with_wall_time is set.
void write_log_csv(std::ostream& out, const std::vector<RoundLog>& logs, bool with_wall_time);

}  // namespace cyber0
