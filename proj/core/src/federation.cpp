#include "cyber0/federation.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <thread>

#include "cyber0/adversary.hpp"
#include "parallel.hpp"
#include "cyber0/robust.hpp"
#include "cyber0/seedstream.hpp"
#include "cyber0/zo.hpp"

namespace cyber0 {

using detail::parallel_for;

namespace {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::filesystem::path first_existing(const std::filesystem::path& dir, const char* stem) {
  const auto plain = dir / stem;
  if (std::filesystem::exists(plain)) return plain;
  const auto gz = dir / (std::string(stem) + ".gz");
  if (std::filesystem::exists(gz)) return gz;
  return plain;
}

// Everything an engine needs besides the evolving model.
class Federation {
 public:
  Federation(const ExperimentConfig& cfg, const ExperimentData& data, const EngineOptions& options)
      : cfg_(cfg), data_(data), options_(options) {
    cfg_.validate();
    model_ = make_model(cfg_, data_);
    dim_ = model_->dimension();
    attack_ = AttackSpec::make(cfg_.attack, cfg_.byzantine_fraction, cfg_.clients);
    for (std::size_t i = 0; i < cfg_.clients; ++i) {
      const bool byz = attack_.is_byzantine(i);
      if (!byz) honest_.push_back(i);
      // Full-Knowledge clients compute their true values too: they enter the sign test.
      if (!byz || !attack_.forges_values() || attack_.kind == AttackKind::FullKnowledge) computing_.push_back(i);
    }
    if (!model_->batch_free()) {
      partition_ = cfg_.distribution == Distribution::Iid
                       ? partition_iid(data_.train, cfg_.clients, cfg_.data_seed)
                       : partition_noniid(data_.train, cfg_.clients, cfg_.data_seed);
      for (std::size_t i = 0; i < cfg_.clients; ++i) {
        if (partition_.shards[i].empty()) {
          throw std::invalid_argument("client " + std::to_string(i) + " received no training rows");
        }
      }
      logistic_ = dynamic_cast<const LogisticRegression*>(model_.get());
      if (logistic_ != nullptr && data_.test.rows > 0) test_design_ = DesignMatrix(data_.test);
    }
    threads_ = options_.threads != 0 ? options_.threads : default_thread_count();
    start_ = std::chrono::steady_clock::now();
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  const LossModel& model() const { return *model_; }
  std::size_t dim() const { return dim_; }
  const AttackSpec& attack() const { return attack_; }
  const std::vector<std::size_t>& computing() const { return computing_; }
  const std::vector<std::size_t>& honest() const { return honest_; }
  std::size_t threads() const { return threads_; }

  Batch batch(std::size_t client, std::uint64_t index) const {
    if (model_->batch_free()) return {};
    Batch b = make_batch(data_.train, sample_batch_rows(partition_.shards[client], cfg_.batch_size, index,
                                                        cfg_.data_seed, client));
    if (attack_.kind == AttackKind::LabelFlipping && attack_.is_byzantine(client)) label_flip(std::span<int>(b.labels));
    return b;
  }

  // Replaces the Byzantine entries of every column with forged values.
  // values[client][j]; honest entries are read-only.
  template <typename Column>
  void forge(std::int64_t step, std::size_t width, Column&& column) const {
    if (!attack_.forges_values() || attack_.byzantine_ids.empty()) return;
    std::vector<double> honest_values(honest_.size());
    std::vector<double> own_values(attack_.byzantine_ids.size());
    for (std::size_t j = 0; j < width; ++j) {
      for (std::size_t h = 0; h < honest_.size(); ++h) honest_values[h] = column(honest_[h], j);
      double shared = 0.0;
      if (attack_.kind == AttackKind::FullKnowledge) {
        for (std::size_t b = 0; b < own_values.size(); ++b) own_values[b] = column(attack_.byzantine_ids[b], j);
        shared = full_knowledge(honest_values, cfg_.trim_fraction, cfg_.clients, own_values);
      } else if (attack_.kind != AttackKind::RandomChoice) {
        shared = forge_value(attack_.kind, honest_values, cfg_.trim_fraction, cfg_.clients, 0);
      }
      for (std::size_t b : attack_.byzantine_ids) {
        double v = shared;
        if (attack_.kind == AttackKind::RandomChoice) {
          const auto seed = derive_seed({cfg_.seed, step, static_cast<std::int64_t>(j), static_cast<std::int64_t>(b),
                                         StreamKind::Adversary});
          v = forge_value(attack_.kind, honest_values, cfg_.trim_fraction, cfg_.clients, seed);
        }
        column(b, j) = v;
      }
    }
  }

  void finish_step(ParamVector& w, std::int64_t step) const {
    if (cfg_.projection_radius > 0.0) w = project_ball(w, cfg_.projection_radius);
    if (!all_finite(w.span())) {
      throw DivergenceError("step " + std::to_string(step) + ": federator model is not finite");
    }
  }

  bool should_log(std::int64_t step) const {
    return step == 0 || static_cast<std::size_t>(step) == cfg_.steps ||
           static_cast<std::size_t>(step) % cfg_.eval_every == 0;
  }

  RoundLog log(std::int64_t step, const ParamVector& w) const {
    RoundLog row;
    row.step = step;
    double sum = 0.0;
    const auto index = static_cast<std::uint64_t>(step) * cfg_.local_epochs;
    for (std::size_t i : honest_) sum += model_->eval(w.span(), batch(i, index));
    row.train_loss = sum / static_cast<double>(honest_.size());
    if (!std::isfinite(row.train_loss)) {
      throw DivergenceError("step " + std::to_string(step) + ": training loss is not finite");
    }
    row.test_acc = logistic_ != nullptr && test_design_.rows() > 0 ? logistic_->accuracy(w.span(), test_design_)
                                                                    : std::numeric_limits<double>::quiet_NaN();
    const CommCost cost = comm_cost(cfg_, dim_, static_cast<std::uint64_t>(step));
    row.uplink_scalars = cost.uplink;
    row.downlink_scalars = cost.downlink;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    return row;
  }

  void observe(std::int64_t step, const ParamVector& w, std::vector<RoundLog>& logs) const {
    if (options_.observer) options_.observer(step, w);
    if (should_log(step)) logs.push_back(log(step, w));
  }

 private:
  ExperimentConfig cfg_;
  const ExperimentData& data_;
  EngineOptions options_;
  std::unique_ptr<LossModel> model_;
  std::size_t dim_ = 0;
  AttackSpec attack_;
  std::vector<std::size_t> honest_;
  std::vector<std::size_t> computing_;
  Partition partition_;
  const LogisticRegression* logistic_ = nullptr;
  DesignMatrix test_design_;
  std::size_t threads_ = 1;
  std::chrono::steady_clock::time_point start_;
};

[[noreturn]] void rethrow_with(std::int64_t step, std::size_t client, const DivergenceError& e) {
  throw DivergenceError("step " + std::to_string(step) + ", client " + std::to_string(client) + ", " + e.what());
}

std::vector<RoundLog> run_zero_order(const ExperimentConfig& config, const ExperimentData& data,
                                     const EngineOptions& options) {
  Federation fed(config, data, options);
  const ExperimentConfig& cfg = fed.cfg();
  const ZoConfig zo = cfg.zo();
  zo.validate();
  const std::size_t k = cfg.k;
  const std::size_t epochs = cfg.local_epochs;
  const std::size_t width = k * epochs;
  const std::size_t d = fed.dim();

  ParamVector w = initial_model(cfg, fed.model());
  // Replicas exist only when explicitly checked; otherwise every honest
  // client's replica is the federator model by construction.
  std::vector<ParamVector> replicas;
  if (cfg.verify_replicas) replicas.assign(fed.honest().size(), w);

  std::vector<RoundLog> logs;
  fed.observe(0, w, logs);
  std::vector<ClientReport> reports(cfg.clients);
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    reports[i].client = i;
    reports[i].coefficients.assign(width, 0.0);
  }

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const auto step = static_cast<std::int64_t>(t);
    std::vector<DirectionBlock> blocks;
    blocks.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<std::uint64_t> seeds(k);
      for (std::size_t r = 0; r < k; ++r) {
        seeds[r] = direction_seed(cfg.seed, step, static_cast<std::int64_t>(r), static_cast<std::int64_t>(e));
      }
      blocks.push_back(make_direction_block(seeds, d, zo.mode));
    }

    const auto& computing = fed.computing();
    parallel_for(computing.size(), fed.threads(), [&](std::size_t idx) {
      const std::size_t client = computing[idx];
      auto& out = reports[client].coefficients;
      try {
        ParamVector local = w;
        for (std::size_t e = 0; e < epochs; ++e) {
          const Batch b = fed.batch(client, t * epochs + e);
          const auto c = zo_coefficients(fed.model(), local.span(), b, zo, blocks[e]);
          std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(e * k));
          if (e + 1 < epochs) apply_update(local, c, cfg.learning_rate, k, blocks[e]);
        }
        // local is dropped here: the client resets to the start-of-round model.
      } catch (const DivergenceError& e) {
        rethrow_with(step, client, e);
      }
    });

    fed.forge(step, width, [&](std::size_t client, std::size_t j) -> double& {
      return reports[client].coefficients[j];
    });
    const std::vector<double> agg = robust_direction_aggregate(reports, cfg.trim_fraction);
    for (std::size_t e = 0; e < epochs; ++e) {
      apply_update(w, std::span<const double>(agg).subspan(e * k, k), cfg.learning_rate, k, blocks[e]);
    }
    fed.finish_step(w, step);

    if (cfg.verify_replicas) {
      parallel_for(replicas.size(), fed.threads(), [&](std::size_t h) {
        ParamVector& replica = replicas[h];
        apply_update(replica, agg, step, cfg.learning_rate, zo, cfg.seed, epochs);
        if (cfg.projection_radius > 0.0) replica = project_ball(replica, cfg.projection_radius);
        if (!replica.bit_equal(w)) {
          throw std::logic_error("step " + std::to_string(step) + ": replica of client " +
                                 std::to_string(fed.honest()[h]) + " diverged from the federator");
        }
      });
    }
    fed.observe(step + 1, w, logs);
  }
  return logs;
}

std::vector<RoundLog> run_first_order(const ExperimentConfig& config, const ExperimentData& data,
                                      const EngineOptions& options, Algorithm algorithm) {
  ExperimentConfig cfg = config;
  cfg.algorithm = algorithm;
  Federation fed(cfg, data, options);
  const std::size_t d = fed.dim();
  ParamVector w = initial_model(cfg, fed.model());

  std::vector<RoundLog> logs;
  fed.observe(0, w, logs);
  std::vector<ParamVector> grads(cfg.clients, ParamVector(d));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const auto step = static_cast<std::int64_t>(t);
    const auto& computing = fed.computing();
    parallel_for(computing.size(), fed.threads(), [&](std::size_t idx) {
      const std::size_t client = computing[idx];
      grads[client] = fed.model().grad(w.span(), fed.batch(client, t));
      if (!all_finite(grads[client].span())) {
        throw DivergenceError("step " + std::to_string(step) + ", client " + std::to_string(client) +
                              ": gradient is not finite");
      }
    });
    fed.forge(step, d, [&](std::size_t client, std::size_t j) -> double& { return grads[client][j]; });
    const ParamVector agg =
        algorithm == Algorithm::FedAvg ? mean_aggregate(grads) : coordwise_trimmed_mean(grads, cfg.trim_fraction);
    axpy_inplace(w, -cfg.learning_rate, agg.span());
    fed.finish_step(w, step);
    fed.observe(step + 1, w, logs);
  }
  return logs;
}

}  // namespace

CommCost comm_cost(const ExperimentConfig& cfg, std::size_t dim, std::uint64_t t) {
  const auto d = static_cast<std::uint64_t>(dim);
  if (cfg.algorithm == Algorithm::Cyber0) {
    const auto per_step = static_cast<std::uint64_t>(cfg.local_epochs) * cfg.k;
    return {t * per_step, 1 + d + t * per_step};
  }
  return {t * d, t * d};
}

std::filesystem::path resolve_mnist_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("CYBER0_MNIST_DIR"); env != nullptr && *env != '\0') return env;
  return cfg.data_dir;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData data;
  if (cfg.model == ModelKind::Quadratic) return data;
  if (cfg.data_source == DataSource::Synthetic) {
    Dataset all = synth_generate(cfg.data_seed, cfg.synth_train + cfg.synth_test, cfg.synth_features,
                                 cfg.synth_classes);
    const std::size_t p = all.features;
    data.train.rows = cfg.synth_train;
    data.test.rows = cfg.synth_test;
    for (Dataset* part : {&data.train, &data.test}) {
      part->features = p;
      part->classes = all.classes;
    }
    const auto split = static_cast<std::ptrdiff_t>(cfg.synth_train);
    data.train.x.assign(all.x.begin(), all.x.begin() + split * static_cast<std::ptrdiff_t>(p));
    data.test.x.assign(all.x.begin() + split * static_cast<std::ptrdiff_t>(p), all.x.end());
    data.train.labels.assign(all.labels.begin(), all.labels.begin() + split);
    data.test.labels.assign(all.labels.begin() + split, all.labels.end());
    return data;
  }
  const auto dir = resolve_mnist_dir(cfg);
  data.train = load_idx(first_existing(dir, "train-images-idx3-ubyte"), first_existing(dir, "train-labels-idx1-ubyte"));
  data.test = load_idx(first_existing(dir, "t10k-images-idx3-ubyte"), first_existing(dir, "t10k-labels-idx1-ubyte"));
  return data;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("CYBER0_THREADS"); env != nullptr) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::unique_ptr<LossModel> make_model(const ExperimentConfig& cfg, const ExperimentData& data) {
  if (cfg.model == ModelKind::Quadratic) {
    const auto seed = derive_seed({cfg.data_seed, 0, 0, -3, StreamKind::Init});
    ParamVector optimum = sphere_direction(seed, cfg.quad_dim);
    for (double& v : optimum) v *= cfg.quad_start_distance;
    return std::make_unique<Quadratic>(cfg.quad_curvature, std::move(optimum));
  }
  if (data.train.rows == 0) throw std::invalid_argument("logistic model needs training data");
  return std::make_unique<LogisticRegression>(data.train.features, data.train.classes);
}

ParamVector initial_model(const ExperimentConfig&, const LossModel& model) {
  return ParamVector(model.dimension(), 0.0);
}

std::vector<RoundLog> run_cyber0(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const EngineOptions& options) {
  return run_zero_order(cfg, data, options);
}

std::vector<RoundLog> run_cyber0_local_epochs(const ExperimentConfig& cfg, const ExperimentData& data,
                                              const EngineOptions& options) {
  if (cfg.local_epochs < 1) throw std::invalid_argument("local epochs must be at least 1");
  return run_zero_order(cfg, data, options);
}

std::vector<RoundLog> run_fedavg(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const EngineOptions& options) {
  return run_first_order(cfg, data, options, Algorithm::FedAvg);
}

std::vector<RoundLog> run_coordwise_tm(const ExperimentConfig& cfg, const ExperimentData& data,
                                       const EngineOptions& options) {
  return run_first_order(cfg, data, options, Algorithm::CoordwiseTm);
}

std::vector<RoundLog> run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                     const EngineOptions& options) {
  switch (cfg.algorithm) {
    case Algorithm::Cyber0: return run_cyber0_local_epochs(cfg, data, options);
    case Algorithm::FedAvg: return run_fedavg(cfg, data, options);
    case Algorithm::CoordwiseTm: return run_coordwise_tm(cfg, data, options);
  }
  throw std::invalid_argument("unknown algorithm");
}

void write_log_csv(std::ostream& out, const std::vector<RoundLog>& logs, bool with_wall_time) {
  out << kLogHeader << '\n';
  for (const auto& row : logs) {
    out << row.step << ',' << fmt_double(row.train_loss) << ',' << fmt_double(row.test_acc) << ','
        << row.uplink_scalars << ',' << row.downlink_scalars << ','
        << (with_wall_time ? fmt_double(std::round(row.wall_ms * 1000.0) / 1000.0) : std::string("0")) << '\n';
  }
}

}  // namespace cyber0
