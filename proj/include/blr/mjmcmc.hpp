#pragma once

#include "blr/dataset.hpp"
#include "blr/marglik.hpp"
#include "blr/model_prior.hpp"
#include "blr/registry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace blr {

using Rng = std::mt19937_64;

/// Seeds an engine from a user seed and a stream index (chain, replicate...).
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct MjParams {
  std::size_t n_iter = 1000;
  double jump_probability = 0.05;
  std::size_t min_flip = 1;
  std::size_t max_flip = 3;
  std::size_t min_jump_flip = 5;
  std::size_t max_jump_flip = 10;
  /// Per-bit flip probability of the randomization kernel.
  double randomization = 0.05;
  std::size_t greedy_max_steps = 50;

  void validate(std::size_t dimension) const;
  /// Flip bounds capped at `dimension` (used when a population is small).
  MjParams clamped(std::size_t dimension) const;
};

/// Binds a population, data set, prior and estimator to a registry. All
/// evaluated models go through log_target(), which memoizes via the registry.
class SearchContext {
 public:
  SearchContext(const Population& pop, const Dataset& data, const PriorConfig& prior,
                const EstimatorFactory& estimator, VisitedRegistry& registry);

  /// log p(Y|M) + log p(M); -infinity for inadmissible models (not recorded).
  double log_target(const Model& m);

  ModelKey key(const Model& m) const;
  std::string key_string(const Model& m) const;
  Model empty_model() const { return Model(pop_.size(), static_cast<std::size_t>(data_.q_fixed())); }

  std::size_t dimension() const { return pop_.size() + static_cast<std::size_t>(data_.q_fixed()); }
  std::size_t evaluations() const { return evaluations_; }
  const Population& population() const { return pop_; }
  const PriorConfig& prior() const { return prior_; }
  VisitedRegistry& registry() { return registry_; }

 private:
  const Population& pop_;
  const Dataset& data_;
  PriorConfig prior_;
  VisitedRegistry& registry_;
  BoundEstimator estimator_;
  std::vector<int> complexity_;
  std::vector<std::string> tree_keys_;
  std::vector<std::size_t> tree_order_;
  std::vector<std::size_t> fixed_order_;
  std::size_t evaluations_ = 0;
};

enum class MoveType { Local, ModeJump };

struct StepInfo {
  MoveType move = MoveType::Local;
  bool accepted = false;
  double log_ratio = 0;
};

/// Flips a uniformly chosen set of min_flip..max_flip indicators and accepts
/// with min{1, exp(delta log target)}.
Model local_step(SearchContext& ctx, const Model& state, Rng& rng, const MjParams& params, StepInfo* info = nullptr);

/// Steepest ascent over single flips, first index winning ties, until no flip
/// strictly improves or max_steps is reached.
Model greedy_optimize(SearchContext& ctx, const Model& start, std::size_t max_steps);

/// log of the mode-jump acceptance ratio before the min{1, .}:
/// (lt_proposal - lt_current) + (h_backward - h_forward) log(eps / (1 - eps)),
/// h_backward = H(current, backward optimum), h_forward = H(proposal, forward optimum).
double mode_jump_log_ratio(double lt_current, double lt_proposal, std::size_t h_backward, std::size_t h_forward,
                           double eps);

/// Large jump, greedy optimization, randomization, backward auxiliary chain and
/// Metropolis-Hastings acceptance.
Model mode_jump_step(SearchContext& ctx, const Model& state, Rng& rng, const MjParams& params,
                     StepInfo* info = nullptr);

struct MoveStats {
  std::size_t local = 0;
  std::size_t local_accepted = 0;
  std::size_t jumps = 0;
  std::size_t jumps_accepted = 0;
};

/// Runs params.n_iter steps from `state` (updated in place). Appends the state
/// key after every step to `trace` when given; writes one line per step to
/// `dump` when given.
void run_chain(SearchContext& ctx, Model& state, const MjParams& params, Rng& rng, MoveStats& stats,
               std::vector<std::string>* trace = nullptr, std::ostream* dump = nullptr);

struct MjOptions {
  /// Defaults to PriorConfig::for_p(data.p()).
  std::optional<PriorConfig> prior;
  EstimatorFactory estimator = jeffreys_estimator();
  std::size_t registry_capacity = 10000;
  /// Defaults to the empty model.
  std::optional<Model> initial;
  bool keep_trace = true;
  std::ostream* trace_dump = nullptr;
};

struct MjRunResult {
  VisitedRegistry registry;
  std::vector<std::string> trace;
  Model final_state;
  MoveStats stats;
  std::size_t evaluations = 0;
};

/// One MJMCMC chain over a fixed population; deterministic given the seed.
MjRunResult run_mjmcmc(const Population& pop, const Dataset& data, const MjParams& params, std::uint64_t seed,
                       const MjOptions& options = {});

}  // namespace blr
