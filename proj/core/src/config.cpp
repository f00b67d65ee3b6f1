#include "cyber0/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace cyber0 {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view value, std::string_view expected) {
  throw std::invalid_argument("expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

std::uint64_t parse_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(v, "a non-negative integer");
  return out;
}

std::size_t parse_size(std::string_view v) { return static_cast<std::size_t>(parse_u64(v)); }

double parse_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(v, "a finite number");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(v, "true or false");
}

template <typename E, std::size_t N>
E parse_enum(std::string_view v, const E (&options)[N]) {
  std::string names;
  for (E e : options) {
    if (v == to_string(e)) return e;
    if (!names.empty()) names += '|';
    names += to_string(e);
  }
  bad_value(v, names);
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

struct Field {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define CYBER0_SIZE(member)                                                                          \
  Field {                                                                                            \
    #member, [](const ExperimentConfig& c) { return std::to_string(c.member); },                     \
        [](ExperimentConfig& c, std::string_view v) { c.member = parse_size(v); }                    \
  }
#define CYBER0_U64(member)                                                                           \
  Field {                                                                                            \
    #member, [](const ExperimentConfig& c) { return std::to_string(c.member); },                     \
        [](ExperimentConfig& c, std::string_view v) { c.member = parse_u64(v); }                     \
  }
#define CYBER0_DOUBLE(member)                                                                        \
  Field {                                                                                            \
    #member, [](const ExperimentConfig& c) { return format_double(c.member); },                      \
        [](ExperimentConfig& c, std::string_view v) { c.member = parse_double(v); }                  \
  }
#define CYBER0_BOOL(member)                                                                          \
  Field {                                                                                            \
    #member, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); },     \
        [](ExperimentConfig& c, std::string_view v) { c.member = parse_bool(v); }                    \
  }
#define CYBER0_ENUM(member, ...)                                                                     \
  Field {                                                                                            \
    #member, [](const ExperimentConfig& c) { return std::string(to_string(c.member)); },             \
        [](ExperimentConfig& c, std::string_view v) {                                                \
          using E = decltype(c.member);                                                              \
          static constexpr E options[] = {__VA_ARGS__};                                              \
          c.member = parse_enum(v, options);                                                         \
        }                                                                                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CYBER0_ENUM(algorithm, Algorithm::Cyber0, Algorithm::FedAvg, Algorithm::CoordwiseTm),
      CYBER0_SIZE(clients),
      CYBER0_DOUBLE(byzantine_fraction),
      CYBER0_DOUBLE(trim_fraction),
      CYBER0_DOUBLE(mu),
      CYBER0_SIZE(k),
      CYBER0_DOUBLE(learning_rate),
      CYBER0_SIZE(steps),
      CYBER0_SIZE(local_epochs),
      CYBER0_SIZE(batch_size),
      CYBER0_ENUM(direction_mode, DirectionMode::Gaussian, DirectionMode::Sphere),
      CYBER0_BOOL(mu_zero),
      CYBER0_ENUM(attack, AttackKind::None, AttackKind::FullKnowledge, AttackKind::AlwaysSmall,
                  AttackKind::AlwaysLarge, AttackKind::RandomChoice, AttackKind::LabelFlipping),
      CYBER0_ENUM(distribution, Distribution::Iid, Distribution::NonIid),
      CYBER0_U64(seed),
      CYBER0_U64(data_seed),
      CYBER0_ENUM(model, ModelKind::Logistic, ModelKind::Quadratic),
      CYBER0_SIZE(eval_every),
      CYBER0_ENUM(data_source, DataSource::Mnist, DataSource::Synthetic),
      Field{"data_dir", [](const ExperimentConfig& c) { return c.data_dir; },
            [](ExperimentConfig& c, std::string_view v) {
              if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
              if (v.empty()) bad_value(v, "a directory");
              c.data_dir = std::string(v);
            }},
      CYBER0_SIZE(synth_train),
      CYBER0_SIZE(synth_test),
      CYBER0_SIZE(synth_features),
      CYBER0_SIZE(synth_classes),
      CYBER0_SIZE(quad_dim),
      CYBER0_DOUBLE(quad_curvature),
      CYBER0_DOUBLE(quad_start_distance),
      CYBER0_DOUBLE(projection_radius),
      CYBER0_BOOL(verify_replicas),
      CYBER0_BOOL(log_wall_time),
  };
  return table;
}

#undef CYBER0_SIZE
#undef CYBER0_U64
#undef CYBER0_DOUBLE
#undef CYBER0_BOOL
#undef CYBER0_ENUM

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.name == key) return &f;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Cyber0: return "cyber0";
    case Algorithm::FedAvg: return "fedavg";
    case Algorithm::CoordwiseTm: return "coordwise_tm";
  }
  return "cyber0";
}

std::string_view to_string(Distribution d) noexcept { return d == Distribution::Iid ? "iid" : "noniid"; }
std::string_view to_string(ModelKind m) noexcept { return m == ModelKind::Logistic ? "logistic" : "quadratic"; }
std::string_view to_string(DataSource s) noexcept { return s == DataSource::Mnist ? "mnist" : "synthetic"; }
std::string_view to_string(DirectionMode m) noexcept { return m == DirectionMode::Gaussian ? "gaussian" : "sphere"; }

ZoConfig ExperimentConfig::zo() const {
  ZoConfig z;
  z.mu = mu_zero ? 0.0 : mu;
  z.k = k;
  z.mode = direction_mode;
  z.mu_zero = mu_zero;
  return z;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + " " + why);
  };
  if (clients == 0) fail("clients", "must be positive");
  if (!(byzantine_fraction >= 0.0 && byzantine_fraction < 0.5)) fail("byzantine_fraction", "must lie in [0, 0.5)");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) fail("trim_fraction", "must lie in [0, 0.5)");
  if (clients < 2 * static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(clients))) + 1) {
    fail("trim_fraction", "leaves no survivors");
  }
  if (!mu_zero && !(mu > 0.0)) fail("mu", "must be positive unless mu_zero = true");
  if (k == 0) fail("k", "must be positive");
  if (steps == 0) fail("steps", "must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (local_epochs == 0) fail("local_epochs", "must be at least 1");
  if (eval_every == 0) fail("eval_every", "must be positive");
  if (model == ModelKind::Logistic && batch_size == 0) fail("batch_size", "must be positive");
  if (model == ModelKind::Quadratic) {
    if (quad_dim == 0) fail("quad_dim", "must be positive");
    if (!(quad_curvature > 0.0)) fail("quad_curvature", "must be positive");
    if (attack == AttackKind::LabelFlipping) fail("attack", "label_flipping needs a labelled dataset");
  }
  if (algorithm != Algorithm::Cyber0 && local_epochs != 1) fail("local_epochs", "applies to cyber0 only");
  if (data_source == DataSource::Synthetic && (synth_train == 0 || synth_test == 0 || synth_features == 0)) {
    fail("synth_train", "synthetic sizes must be positive");
  }
  if (data_source == DataSource::Synthetic && (synth_classes < 2 || synth_classes > 10)) {
    fail("synth_classes", "must lie in [2, 10]");
  }
  if (projection_radius < 0.0) fail("projection_radius", "must be non-negative");
}

ConfigError::ConfigError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw std::invalid_argument("unknown key '" + std::string(key) + "'");
  f->set(cfg, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto col_of = [&](std::string_view part) {
      return static_cast<std::size_t>(part.data() - line.data()) + 1;
    };
    const auto eq = line.find('=');
    const std::string_view key = trim(line.substr(0, eq == std::string_view::npos ? line.size() : eq));
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, col_of(key) + key.size(), "expected '=' after key");
    }
    if (key.empty()) throw ConfigError(line_no, eq + 1, "missing key before '='");
    const Field* f = find_field(key);
    if (f == nullptr) throw ConfigError(line_no, col_of(key), "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(line_no, col_of(key), "duplicate key '" + std::string(key) + "'");
    }
    std::string_view value = trim(line.substr(eq + 1));
    const std::size_t value_col = value.empty() ? eq + 2 : col_of(value);
    if (value.empty()) throw ConfigError(line_no, value_col, "missing value for '" + std::string(key) + "'");
    try {
      f->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, value_col, std::string(key) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.name;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.name);
    return k;
  }();
  return keys;
}

}  // namespace cyber0
