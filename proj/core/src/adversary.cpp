#include "cyber0/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cyber0/robust.hpp"
#include "cyber0/seedstream.hpp"

namespace cyber0 {

namespace {

std::vector<double> sorted_honest(std::span<const double> honest) {
  if (honest.empty()) throw std::invalid_argument("attack: no honest values to observe");
  std::vector<double> v(honest.begin(), honest.end());
  std::sort(v.begin(), v.end());
  return v;
}

std::size_t checked_rank(double beta, std::size_t m, std::size_t available) {
  const std::size_t j = attack_rank(beta, m);
  if (j > available) {
    throw std::invalid_argument("attack: rank " + std::to_string(j) + " exceeds " + std::to_string(available) +
                                " honest values");
  }
  return j;
}

}  // namespace

std::string_view to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::FullKnowledge: return "full_knowledge";
    case AttackKind::AlwaysSmall: return "always_small";
    case AttackKind::AlwaysLarge: return "always_large";
    case AttackKind::RandomChoice: return "random_choice";
    case AttackKind::LabelFlipping: return "label_flipping";
  }
  return "none";
}

AttackKind parse_attack(std::string_view name) {
  for (auto kind : {AttackKind::None, AttackKind::FullKnowledge, AttackKind::AlwaysSmall, AttackKind::AlwaysLarge,
                    AttackKind::RandomChoice, AttackKind::LabelFlipping}) {
    if (name == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown attack '" + std::string(name) + "'");
}

AttackSpec AttackSpec::make(AttackKind kind, double alpha, std::size_t clients) {
  if (!(alpha >= 0.0) || !(alpha < 0.5)) throw std::invalid_argument("attack: alpha must lie in [0, 1/2)");
  AttackSpec spec;
  spec.kind = kind;
  if (kind == AttackKind::None) return spec;
  const auto count = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(clients)));
  for (std::size_t i = clients - count; i < clients; ++i) spec.byzantine_ids.push_back(i);
  return spec;
}

bool AttackSpec::is_byzantine(std::size_t client) const noexcept {
  return std::find(byzantine_ids.begin(), byzantine_ids.end(), client) != byzantine_ids.end();
}

bool AttackSpec::forges_values() const noexcept {
  return kind != AttackKind::None && kind != AttackKind::LabelFlipping;
}

std::size_t attack_rank(double beta, std::size_t m) { return std::max<std::size_t>(trim_count(beta, m), 1); }

double full_knowledge(std::span<const double> honest, double beta, std::size_t m,
                      std::span<const double> byzantine_own) {
  const auto v = sorted_honest(honest);
  const std::size_t j = checked_rank(beta, m, v.size());
  double sum = 0.0;
  for (double x : honest) sum += x;
  for (double x : byzantine_own) sum += x;
  const double estimate = sum / static_cast<double>(m);
  return estimate >= 0.0 ? v[j - 1] : v[v.size() - j];
}

double always_small(std::span<const double> honest, double beta, std::size_t m) {
  const auto v = sorted_honest(honest);
  return v[checked_rank(beta, m, v.size()) - 1];
}

double always_large(std::span<const double> honest, double beta, std::size_t m) {
  const auto v = sorted_honest(honest);
  return v[v.size() - checked_rank(beta, m, v.size())];
}

double random_choice(std::span<const double> honest, double beta, std::size_t m, std::uint64_t seed) {
  RngStream rng(seed);
  return (rng.next_u64() >> 63) == 0 ? always_small(honest, beta, m) : always_large(honest, beta, m);
}

double forge_value(AttackKind kind, std::span<const double> honest, double beta, std::size_t m,
                   std::uint64_t seed) {
  switch (kind) {
    case AttackKind::FullKnowledge: return full_knowledge(honest, beta, m);
    case AttackKind::AlwaysSmall: return always_small(honest, beta, m);
    case AttackKind::AlwaysLarge: return always_large(honest, beta, m);
    case AttackKind::RandomChoice: return random_choice(honest, beta, m, seed);
    case AttackKind::None:
    case AttackKind::LabelFlipping: break;
  }
  throw std::invalid_argument("forge_value: attack '" + std::string(to_string(kind)) + "' does not forge values");
}

int flip_label(int label) {
  if (label < 0 || label > 9) throw std::invalid_argument("label_flip: label " + std::to_string(label) + " outside [0, 9]");
  return 9 - label;
}

void label_flip(std::span<int> labels) {
  for (int& l : labels) l = flip_label(l);
}

Dataset label_flip(Dataset data) {
  label_flip(std::span<int>(data.labels));
  return data;
}

}  // namespace cyber0
