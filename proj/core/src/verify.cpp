#include "cyber0/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cyber0/federation.hpp"
#include "cyber0/losses.hpp"
#include "cyber0/seedstream.hpp"
#include "parallel.hpp"

namespace cyber0 {

namespace {

constexpr std::size_t kShard = std::size_t{1} << 14;

std::size_t shard_count(std::size_t n) { return (n + kShard - 1) / kShard; }
std::size_t shard_size(std::size_t n, std::size_t s) { return std::min(kShard, n - s * kShard); }

GaussianStream shard_stream(std::uint64_t seed, std::size_t shard, std::int64_t tag) {
  return GaussianStream(derive_seed({seed, static_cast<std::int64_t>(shard), tag, 0, StreamKind::Direction}));
}

// Gaussian vector scaled to unit length, redrawn if it is exactly zero.
void draw_sphere(GaussianStream& g, std::span<double> out) {
  for (;;) {
    double sumsq = 0.0;
    for (double& v : out) {
      v = g.next();
      sumsq += v * v;
    }
    if (sumsq > 0.0) {
      const double norm = std::sqrt(sumsq);
      for (double& v : out) v = v / norm;
      return;
    }
  }
}

struct Moments {
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
  }
};

// Shards run in parallel; their moments are reduced in shard order.
template <typename Sample>
McEstimate mc_mean(std::size_t n, std::uint64_t seed, const Sample& sample) {
  if (n == 0) throw std::invalid_argument("Monte-Carlo estimate needs at least one sample");
  const std::size_t shards = shard_count(n);
  std::vector<Moments> parts(shards);
  detail::parallel_for(shards, default_thread_count(), [&](std::size_t s) {
    GaussianStream g = shard_stream(seed, s, 0);
    auto draw = sample;  // each shard owns its scratch buffers
    Moments m;
    const std::size_t count = shard_size(n, s);
    for (std::size_t i = 0; i < count; ++i) m.add(draw(g));
    parts[s] = m;
  });
  Moments total;
  for (const auto& p : parts) {
    total.sum += p.sum;
    total.sumsq += p.sumsq;
  }
  const auto nd = static_cast<double>(n);
  McEstimate est;
  est.samples = n;
  est.mean = total.sum / nd;
  const double var = n > 1 ? std::max(0.0, (total.sumsq - nd * est.mean * est.mean) / (nd - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / nd);
  return est;
}

// (1/N) sum z z^T, full d x d.
std::vector<double> second_moment(std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d == 0 || n == 0) throw std::invalid_argument("mc_isotropy: d and N must be positive");
  const std::size_t shards = shard_count(n);
  std::vector<std::vector<double>> parts(shards);
  detail::parallel_for(shards, default_thread_count(), [&](std::size_t s) {
    GaussianStream g = shard_stream(seed, s, 0);
    std::vector<double> acc(d * d, 0.0);
    std::vector<double> z(d);
    const std::size_t count = shard_size(n, s);
    for (std::size_t i = 0; i < count; ++i) {
      draw_sphere(g, z);
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) acc[a * d + b] += z[a] * z[b];
      }
    }
    parts[s] = std::move(acc);
  });
  std::vector<double> m(d * d, 0.0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += p[i];
  }
  const auto nd = static_cast<double>(n);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      m[a * d + b] /= nd;
      m[b * d + a] = m[a * d + b];
    }
  }
  return m;
}

std::vector<double> random_vector(std::uint64_t seed, std::size_t d) {
  GaussianStream g(derive_seed({seed, 0, 0, 0, StreamKind::Init}));
  std::vector<double> x(d);
  for (double& v : x) v = g.next();
  return x;
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

CheckReport within(std::string name, double estimate, double target, double tolerance, std::string detail = {}) {
  CheckReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.target = target;
  r.tolerance = tolerance;
  r.pass = std::fabs(estimate - target) <= tolerance;
  r.detail = std::move(detail);
  return r;
}

CheckReport at_most(std::string name, double estimate, double limit, std::string detail = {}) {
  CheckReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.target = limit;
  r.tolerance = 0.0;
  r.pass = estimate <= limit;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

double TheoryParams::tau() const {
  if (d == 0 || k == 0) throw std::invalid_argument("TheoryParams: d and k must be positive");
  const auto dd = static_cast<double>(d);
  const auto kk = static_cast<double>(k);
  return mu_zero ? (dd + kk - 1.0) / kk : (2.0 * dd + (kk - 1.0) * (1.0 + std::sqrt(dd))) / kk;
}

double TheoryParams::eta() const { return mu_zero ? 1.0 / (tau() * smoothness) : 1.0 / (2.0 * tau() * smoothness); }

double TheoryParams::rate_bound() const { return 1.0 - lambda / (tau() * (smoothness + lambda)); }

double mc_isotropy(std::size_t d, std::size_t n, std::uint64_t seed) {
  const auto m = second_moment(d, n, seed);
  const double diag = 1.0 / static_cast<double>(d);
  double worst = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) worst = std::max(worst, std::fabs(m[a * d + b] - (a == b ? diag : 0.0)));
  }
  return worst;
}

double mc_isotropy_diagonal(std::size_t d, std::size_t n, std::uint64_t seed) {
  const auto m = second_moment(d, n, seed);
  const auto dd = static_cast<double>(d);
  double worst = 0.0;
  for (std::size_t a = 0; a < d; ++a) worst = std::max(worst, std::fabs(dd * m[a * d + a] - 1.0));
  return worst;
}

McEstimate mc_norm_factor(std::size_t d, std::size_t k, std::size_t n, std::span<const double> x,
                          std::uint64_t seed) {
  if (d == 0 || k == 0 || x.size() != d) throw std::invalid_argument("mc_norm_factor: bad shape");
  const double xx = dot(x, x);
  if (!(xx > 0.0)) throw std::invalid_argument("mc_norm_factor: x must be non-zero");
  const auto dd = static_cast<double>(d);
  const auto kk = static_cast<double>(k);
  return mc_mean(n, seed, [&, z = std::vector<double>(d), v = std::vector<double>(d)](GaussianStream& g) mutable {
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      draw_sphere(g, z);
      const double c = dd * dot(x, z);
      for (std::size_t i = 0; i < d; ++i) v[i] += c * z[i];
    }
    double sq = 0.0;
    for (double vi : v) sq += (vi / kk) * (vi / kk);
    return sq / xx;
  });
}

McEstimate mc_cross_abs_bound(std::size_t d, std::size_t n, std::span<const double> x, std::uint64_t seed) {
  if (d == 0 || x.size() != d) throw std::invalid_argument("mc_cross_abs_bound: bad shape");
  return mc_mean(n, seed, [&, z1 = std::vector<double>(d), z2 = std::vector<double>(d)](GaussianStream& g) mutable {
    draw_sphere(g, z1);
    draw_sphere(g, z2);
    const double proj = dot(x, z1);
    return std::fabs(dot(z1, z2)) * (proj * proj);
  });
}

GapEstimate smoothed_gap_quadratic(double lambda, double mu, std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("smoothed_gap_quadratic: d must be positive");
  GaussianStream init(derive_seed({seed, 0, 0, 0, StreamKind::Init}));
  ParamVector optimum(d);
  for (double& v : optimum) v = init.next();
  std::vector<double> offset(d);
  draw_sphere(init, offset);
  ParamVector w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = optimum[i] + offset[i];

  const Quadratic f(lambda, optimum);
  const double base = f.eval(w.span());
  GapEstimate out;
  out.gap = mc_mean(n, seed, [&, z = std::vector<double>(d), p = std::vector<double>(d)](GaussianStream& g) mutable {
    draw_sphere(g, z);
    for (std::size_t i = 0; i < d; ++i) p[i] = w[i] + mu * z[i];
    return f.eval(p) - base;
  });
  out.expected = lambda * mu * mu / 2.0;
  out.deviation = std::fabs(out.gap.mean - out.expected);
  return out;
}

double fit_geometric_rate(std::span<const double> values, std::size_t first, std::size_t last) {
  if (last <= first || last >= values.size()) throw std::invalid_argument("fit_geometric_rate: need two points");
  double st = 0.0;
  double sy = 0.0;
  const auto n = static_cast<double>(last - first + 1);
  for (std::size_t t = first; t <= last; ++t) {
    st += static_cast<double>(t);
    sy += std::log(values[t]);
  }
  const double mt = st / n;
  const double my = sy / n;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = first; t <= last; ++t) {
    const double dt = static_cast<double>(t) - mt;
    num += dt * (std::log(values[t]) - my);
    den += dt * dt;
  }
  return std::exp(num / den);
}

ContractionResult contraction_rate(const ExperimentConfig& cfg, std::size_t seeds, std::size_t tail) {
  if (cfg.model != ModelKind::Quadratic) throw std::invalid_argument("contraction_rate: needs the quadratic model");
  if (seeds == 0) throw std::invalid_argument("contraction_rate: needs at least one seed");
  const ExperimentData none;
  const auto model = make_model(cfg, none);
  const auto& quad = static_cast<const Quadratic&>(*model);
  const std::size_t steps = cfg.steps;

  std::vector<std::vector<double>> dist(seeds, std::vector<double>(steps + 1, 0.0));
  detail::parallel_for(seeds, default_thread_count(), [&](std::size_t s) {
    ExperimentConfig run = cfg;
    run.seed = cfg.seed + s;
    EngineOptions opts;
    opts.threads = 1;
    opts.observer = [&, s](std::int64_t step, const ParamVector& w) {
      dist[s][static_cast<std::size_t>(step)] = quad.distance(w.span());
    };
    run_cyber0_local_epochs(run, none, opts);
  });

  ContractionResult out;
  out.mean_distance.assign(steps + 1, 0.0);
  for (std::size_t t = 0; t <= steps; ++t) {
    for (std::size_t s = 0; s < seeds; ++s) out.mean_distance[t] += dist[s][t];
    out.mean_distance[t] /= static_cast<double>(seeds);
  }
  const double start = out.mean_distance[0];
  std::size_t last = 0;
  while (last + 1 <= steps && out.mean_distance[last + 1] > 1e-12 * start) ++last;
  if (last >= 1) {
    out.rate = fit_geometric_rate(out.mean_distance, 0, last);
  } else {
    out.rate = steps >= 1 ? out.mean_distance[1] / start : 1.0;
  }
  const std::size_t span = std::min(tail, steps + 1);
  for (std::size_t t = steps + 1 - span; t <= steps; ++t) out.floor += out.mean_distance[t];
  out.floor /= static_cast<double>(span);
  return out;
}

ExperimentConfig theorem_config(std::size_t d, std::size_t k, double mu, std::size_t steps) {
  ExperimentConfig cfg;
  cfg.model = ModelKind::Quadratic;
  cfg.quad_dim = d;
  cfg.quad_curvature = 1.0;
  cfg.quad_start_distance = 1.0;
  cfg.k = k;
  cfg.direction_mode = DirectionMode::Sphere;
  cfg.mu_zero = mu == 0.0;
  cfg.mu = mu;
  cfg.clients = 4;
  cfg.byzantine_fraction = 0.0;
  cfg.trim_fraction = 0.0;
  cfg.attack = AttackKind::None;
  cfg.steps = steps;
  cfg.eval_every = steps;
  TheoryParams theory;
  theory.lambda = cfg.quad_curvature;
  theory.smoothness = cfg.quad_curvature;
  theory.d = d;
  theory.k = k;
  theory.mu_zero = cfg.mu_zero;
  cfg.learning_rate = theory.eta();
  return cfg;
}

std::vector<CheckReport> lemma_checks(std::uint64_t seed) {
  std::vector<CheckReport> out;

  const double iso = mc_isotropy(10, 1'000'000, seed);
  out.push_back(at_most("isotropy d=10 N=1e6", iso, 0.002, "max |E[zz^T] - I/d|"));
  const double diag = mc_isotropy_diagonal(10, 1'000'000, seed);
  out.push_back(at_most("isotropy diagonal d=10", diag, 0.01, "max relative error of E[z_i^2] vs 1/d"));
  out.push_back(at_most("isotropy d=1", mc_isotropy(1, 10'000, seed), 0.0, "exact"));

  const auto x8 = random_vector(seed, 8);
  const auto nf1 = mc_norm_factor(8, 1, 200'000, x8, seed);
  out.push_back(within("norm factor d=8 k=1", nf1.mean, 8.0, 0.03 * 8.0, fmt("3 s.e. = %.4g", 3 * nf1.std_error)));
  const double big = (8.0 + 511.0) / 512.0;
  const auto nf512 = mc_norm_factor(8, 512, 200'000, x8, seed + 1);
  out.push_back(
      within("norm factor d=8 k=512", nf512.mean, big, 0.02 * big, fmt("3 s.e. = %.4g", 3 * nf512.std_error)));
  const std::vector<double> x1{0.75};
  const auto nfd1 = mc_norm_factor(1, 7, 10'000, x1, seed);
  out.push_back(within("norm factor d=1", nfd1.mean, 1.0, 0.0, "exact"));

  const auto x16 = random_vector(seed + 2, 16);
  const double bound = dot(x16, x16) / std::pow(16.0, 1.5);
  const auto cross = mc_cross_abs_bound(16, 1'000'000, x16, seed);
  out.push_back(at_most("cross bound d=16 N=1e6", cross.mean, 0.9 * bound,
                        fmt("bound %.6g, ratio %.4f, 3 s.e. = %.3g", bound, cross.mean / bound, 3 * cross.std_error)));
  const auto cross1 = mc_cross_abs_bound(1, 10'000, x1, seed);
  out.push_back(within("cross bound d=1", cross1.mean, x1[0] * x1[0], 0.0, "equality"));

  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto gap = smoothed_gap_quadratic(1.0, 0.1, 16, 100'000, seed + s);
    out.push_back(within("smoothed gap lambda=1 mu=0.1 w#" + std::to_string(s), gap.gap.mean, gap.expected,
                         0.05 * gap.expected, fmt("3 s.e. = %.3g", 3 * gap.gap.std_error)));
  }
  const auto gap0 = smoothed_gap_quadratic(1.0, 0.0, 16, 10'000, seed);
  out.push_back(within("smoothed gap mu=0", gap0.gap.mean, 0.0, 0.0, "exact"));
  return out;
}

std::vector<CheckReport> theorem_checks(std::uint64_t seed) {
  std::vector<CheckReport> out;
  {
    ExperimentConfig cfg = theorem_config(1, 1, 0.0, 10);
    cfg.seed = seed;
    const auto res = contraction_rate(cfg, 20);
    out.push_back(at_most("mu=0 rate d=1 k=1", res.rate, 0.5 + 0.02, "bound 0.5"));
  }
  {
    ExperimentConfig cfg = theorem_config(16, 16, 0.0, 40);
    cfg.seed = seed;
    TheoryParams theory{1.0, 1.0, 16, 16, true};
    const auto res = contraction_rate(cfg, 20);
    out.push_back(at_most("mu=0 rate d=16 k=16", res.rate, theory.rate_bound() + 0.02,
                          fmt("bound %.4f, tau %.4f", theory.rate_bound(), theory.tau())));
  }
  {
    ExperimentConfig coarse = theorem_config(16, 16, 1e-3, 1000);
    ExperimentConfig fine = theorem_config(16, 16, 1e-4, 1000);
    coarse.seed = fine.seed = seed;
    const auto a = contraction_rate(coarse, 20);
    const auto b = contraction_rate(fine, 20);
    CheckReport r;
    r.name = "mu>0 floor shrink 1e-3 -> 1e-4";
    r.estimate = b.floor > 0.0 ? a.floor / b.floor : INFINITY;
    r.target = 5.0;
    r.pass = r.estimate >= 5.0;
    r.detail = fmt("floors %.3g and %.3g", a.floor, b.floor);
    out.push_back(r);
  }
  return out;
}

std::string format_reports(const std::vector<CheckReport>& reports) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof line, "%-6s %-36s %14s %14s %12s  %s\n", "status", "check", "estimate", "target",
                "tolerance", "detail");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-6s %-36s %14.6g %14.6g %12.4g  %s\n", r.pass ? "PASS" : "FAIL",
                  r.name.c_str(), r.estimate, r.target, r.tolerance, r.detail.c_str());
    out += line;
  }
  return out;
}

}  // namespace cyber0
