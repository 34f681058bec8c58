#pragma once

#include "blr/dataset.hpp"
#include "blr/mjmcmc.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace blr {

struct GmjConfig {
  std::size_t d = 15;
  /// Protected prefix of S_1 (top trees by |corr(X, Y)|), never evicted.
  std::size_t d1 = 0;
  int c_max = 5;
  std::size_t k_max = 15;
  double p_and = 0.9;
  double p_not = 0.1;
  double rho_min = 0.2;
  std::size_t t_max = 20;
  /// Probability that a vacancy is filled by a fresh single leaf.
  double p_fresh_leaf = 0.2;
  /// Candidate draws allowed per vacancy before giving up on it.
  std::size_t retry_budget = 100;
  MjParams exploratory = [] {
    MjParams p;
    p.n_iter = 250;
    return p;
  }();
  MjParams final_stage = [] {
    MjParams p;
    p.n_iter = 10000;
    return p;
  }();
  std::size_t m_fin = 10000;
  double report_threshold = 0.5;
  std::size_t chains = 1;
  /// Penalty base log a; defaults to -2 log p.
  std::optional<double> log_a;
  ComplexityMeasure measure = ComplexityMeasure::LeafCount;
  std::uint64_t seed = 0;

  void validate() const;
  PriorConfig prior(std::size_t p) const;
};

/// Expression (or fixed covariate name) -> marginal inclusion probability.
using InclusionMap = std::map<std::string, double>;

struct ChainResult {
  Population population;
  VisitedRegistry registry;
  InclusionMap inclusion;
  /// log-sum-exp of every registry target.
  double log_mass = 0;
};

/// S_1: all informative single leaves when p <= d (padded with two-leaf
/// conjunctions of the strongest leaves), else the d leaves with the largest
/// |corr(X_j, Y)|. Constant and duplicated columns are skipped. Trees are
/// ordered by score so the first d1 form the protected prefix.
Population init_population(const Dataset& data, const GmjConfig& cfg);

enum class Operator { Crossover, Modification, Reduction };

/// Proposes one tree from the population with the given operator, weights
/// proportional to inclusion + 0.01. Result is canonical up to complement and
/// has at most c_max leaves. Returns nullopt when no admissible candidate was
/// found within the retry budget.
std::optional<LogicTree> generate_candidate(Operator kind, const Population& pop, const std::vector<double>& inclusion,
                                            const GmjConfig& cfg, Rng& rng);

/// Crossover of two given parents: AND with probability p_and else OR, then
/// negated with probability p_not.
LogicTree crossover(const LogicTree& a, const LogicTree& b, const GmjConfig& cfg, Rng& rng);
/// Negates a uniformly chosen node with probability p_not, else toggles a
/// uniformly chosen operator.
LogicTree modification(const LogicTree& parent, const GmjConfig& cfg, Rng& rng);
/// Deletes the leaf at position `leaf` (left-to-right) and splices its sibling up.
LogicTree reduction(const LogicTree& parent, int leaf);

/// Inclusion of each population tree under the renormalized posterior,
/// aligned with pop.trees.
std::vector<double> marginal_inclusion(const VisitedRegistry& registry, const Population& pop);
/// Inclusion of every expression and fixed covariate occurring in the registry.
InclusionMap inclusion_map(const VisitedRegistry& registry);

struct EvolutionStats {
  std::size_t removed = 0;
  std::size_t added = 0;
  std::size_t rejected = 0;
  std::size_t unfilled = 0;
};

/// Removes unprotected trees with inclusion below rho_min with probability
/// 1 - inclusion and refills the vacancies with screened candidates.
Population evolve_population(const Population& pop, const std::vector<double>& inclusion, const Dataset& data,
                             const GmjConfig& cfg, Rng& rng, EvolutionStats* stats = nullptr);

/// Candidate screen: rejects trees over c_max, constant columns and columns
/// equal or complementary to any existing column.
bool admissible_candidate(const BitColumn& column, const std::vector<BitColumn>& existing);

struct GmjOptions {
  EstimatorFactory estimator = jeffreys_estimator();
  /// Called after each generation (testing hook).
  std::function<void(const Population&)> on_generation;
};

/// One GMJMCMC chain. The final inference uses the registry of the last
/// population only.
ChainResult run_gmjmcmc(const Dataset& data, const GmjConfig& cfg, std::uint64_t seed, const GmjOptions& options = {});

enum class AggregationMode { Weighted, Union };

struct AggregateReport {
  InclusionMap inclusion;
  /// Per-chain weights (weighted mode).
  std::vector<double> weights;
  AggregationMode mode = AggregationMode::Weighted;
};

/// Weighted: inclusion = sum_r w_r rho_r, w_r proportional to exp(log_mass_r).
/// Union: renormalize over the union of all registries.
AggregateReport aggregate_chains(const std::vector<ChainResult>& results,
                                 AggregationMode mode = AggregationMode::Weighted);

/// Runs cfg.chains independent chains (streams seed, 0..chains-1) on up to
/// `threads` worker threads (0 = hardware concurrency).
std::vector<ChainResult> run_chains(const Dataset& data, const GmjConfig& cfg, std::uint64_t seed,
                                    unsigned threads = 0, const GmjOptions& options = {});

using Report = std::vector<std::pair<std::string, double>>;

/// Expressions with inclusion >= threshold, by descending probability.
Report report_expressions(const AggregateReport& agg, double threshold);

/// TSV with header "expression<TAB>probability", 15 significant digits.
void write_report(std::ostream& out, const Report& report);
Report read_report(std::istream& in);

/// One line per registry record: key, log marginal likelihood, log prior, posterior.
void write_registry(std::ostream& out, const VisitedRegistry& registry);

}  // namespace blr
