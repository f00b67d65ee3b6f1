#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cyber0/data.hpp"

namespace cyber0 {

enum class AttackKind {
  None,
  FullKnowledge,
  AlwaysSmall,
  AlwaysLarge,
  RandomChoice,
  LabelFlipping,
};

std::string_view to_string(AttackKind kind) noexcept;
/// Accepts the names printed by to_string (snake_case). Throws std::invalid_argument.
AttackKind parse_attack(std::string_view name);

/// Byzantine clients and their behaviour for a whole run.
struct AttackSpec {
  AttackKind kind = AttackKind::None;
  std::vector<std::size_t> byzantine_ids;

  /// The last floor(alpha m) client indices; empty when kind is None.
  static AttackSpec make(AttackKind kind, double alpha, std::size_t clients);

  bool is_byzantine(std::size_t client) const noexcept;
  /// True for attacks that replace uploaded values (everything but None and LabelFlipping).
  bool forges_values() const noexcept;
};

/// Order-statistic index used by the attacks: max(floor(beta m), 1).
std::size_t attack_rank(double beta, std::size_t m);

/// Value sent by every Byzantine client for one direction under the
/// Full-Knowledge behaviour: the mean over all m true values (honest plus
/// the Byzantine clients' own, `byzantine_own`) decides the sign; a
/// non-negative sign sends the rank-th smallest honest value, otherwise the
/// rank-th largest.
double full_knowledge(std::span<const double> honest, double beta, std::size_t m,
                      std::span<const double> byzantine_own = {});
double always_small(std::span<const double> honest, double beta, std::size_t m);
double always_large(std::span<const double> honest, double beta, std::size_t m);
/// Uniform choice between always_small and always_large driven by `seed`.
double random_choice(std::span<const double> honest, double beta, std::size_t m, std::uint64_t seed);

/// Dispatches one of the value-forging attacks.
double forge_value(AttackKind kind, std::span<const double> honest, double beta, std::size_t m,
                   std::uint64_t seed);

/// Label l -> 9 - l. Throws std::invalid_argument for labels outside [0, 9].
int flip_label(int label);
void label_flip(std::span<int> labels);
Dataset label_flip(Dataset data);

}  // namespace cyber0
