#pragma once

#include "blr/logic_tree.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace blr {

/// Current search space: an ordered set of pairwise non-equivalent trees. The
/// first `protected_count` trees are never removed by evolution.
struct Population {
  std::vector<LogicTree> trees;
  std::size_t protected_count = 0;
  int generation = 1;

  std::size_t size() const { return trees.size(); }
};

/// Inclusion indicators over a population's trees and the non-binary covariates.
/// The intercept is implicit and always present.
struct Model {
  std::vector<bool> logic;
  std::vector<bool> fixed;

  Model() = default;
  Model(std::size_t d, std::size_t q_fixed) : logic(d, false), fixed(q_fixed, false) {}

  std::size_t dimension() const { return logic.size() + fixed.size(); }
  /// Indicator at a combined index: trees first, then fixed covariates.
  bool operator[](std::size_t i) const { return i < logic.size() ? logic[i] : fixed[i - logic.size()]; }
  void flip(std::size_t i);
  std::size_t logic_count() const;
  std::size_t fixed_count() const;
  std::size_t active_count() const { return logic_count() + fixed_count(); }

  friend bool operator==(const Model&, const Model&) = default;
};

std::size_t hamming(const Model& a, const Model& b);

struct PriorConfig {
  /// Natural log of the penalty base a; must be negative.
  double log_a = -2.0 * 3.912023005428146;  // a = 1/50^2
  std::size_t k_max = 15;
  ComplexityMeasure measure = ComplexityMeasure::LeafCount;

  /// Documented default a = 1/p^2.
  static PriorConfig for_p(std::size_t p, std::size_t k_max = 15);
  void validate() const;
};

/// True iff the number of active components is at most k_max.
bool is_admissible(const Model& m, const PriorConfig& cfg);

/// log_a * (sum of c(L_j) over active trees + number of active fixed effects).
/// Unnormalized; throws InvalidArgument on a model that does not fit the
/// population or exceeds k_max.
double log_model_prior(const Model& m, const Population& pop, const PriorConfig& cfg);

/// Same, from precomputed per-tree complexities (hot path).
double log_model_prior(const Model& m, const std::vector<int>& tree_complexity, double log_a);

}  // namespace blr
