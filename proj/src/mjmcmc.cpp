#include "blr/mjmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace blr {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Flips `count` distinct, uniformly chosen indicators.
Model flip_random(const Model& m, std::size_t count, Rng& rng) {
  const std::size_t dim = m.dimension();
  count = std::min(count, dim);
  std::vector<std::size_t> idx(dim);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Model out = m;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = uniform_size(rng, i, dim - 1);
    std::swap(idx[i], idx[j]);
    out.flip(idx[i]);
  }
  return out;
}

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0) return true;
  if (!std::isfinite(log_ratio)) return false;
  return uniform01(rng) < std::exp(log_ratio);
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

void MjParams::validate(std::size_t dimension) const {
  auto bad = [](const std::string& what) { throw InvalidArgument("MJMCMC parameters: " + what); };
  if (dimension == 0) bad("empty search space");
  if (!(min_flip >= 1 && min_flip <= max_flip && max_flip <= dimension))
    bad("need 1 <= min_flip <= max_flip <= " + std::to_string(dimension));
  if (!(min_jump_flip >= 1 && min_jump_flip <= max_jump_flip && max_jump_flip <= dimension))
    bad("need 1 <= min_jump_flip <= max_jump_flip <= " + std::to_string(dimension));
  if (!(randomization > 0 && randomization < 0.5)) bad("randomization must lie in (0, 0.5)");
  if (!(jump_probability >= 0 && jump_probability <= 1)) bad("jump probability must lie in [0, 1]");
}

MjParams MjParams::clamped(std::size_t dimension) const {
  MjParams p = *this;
  const std::size_t dim = std::max<std::size_t>(dimension, 1);
  p.max_flip = std::clamp<std::size_t>(p.max_flip, 1, dim);
  p.min_flip = std::clamp<std::size_t>(p.min_flip, 1, p.max_flip);
  p.max_jump_flip = std::clamp<std::size_t>(p.max_jump_flip, 1, dim);
  p.min_jump_flip = std::clamp<std::size_t>(p.min_jump_flip, 1, p.max_jump_flip);
  return p;
}

SearchContext::SearchContext(const Population& pop, const Dataset& data, const PriorConfig& prior,
                             const EstimatorFactory& estimator, VisitedRegistry& registry)
    : pop_(pop), data_(data), prior_(prior), registry_(registry), estimator_(estimator(pop, data)) {
  prior_.validate();
  complexity_.reserve(pop.size());
  tree_keys_.reserve(pop.size());
  for (const auto& t : pop.trees) {
    complexity_.push_back(complexity(t, prior_.measure));
    tree_keys_.push_back(to_string(t));
  }
  tree_order_.resize(pop.size());
  std::iota(tree_order_.begin(), tree_order_.end(), std::size_t{0});
  std::sort(tree_order_.begin(), tree_order_.end(),
            [&](std::size_t a, std::size_t b) { return tree_keys_[a] < tree_keys_[b]; });
  fixed_order_.resize(static_cast<std::size_t>(data.q_fixed()));
  std::iota(fixed_order_.begin(), fixed_order_.end(), std::size_t{0});
  std::sort(fixed_order_.begin(), fixed_order_.end(),
            [&](std::size_t a, std::size_t b) { return data.z_names[a] < data.z_names[b]; });
}

ModelKey SearchContext::key(const Model& m) const {
  ModelKey k;
  for (std::size_t j : tree_order_)
    if (m.logic[j]) k.trees.push_back(tree_keys_[j]);
  for (std::size_t j : fixed_order_)
    if (m.fixed[j]) k.fixed.push_back(data_.z_names[j]);
  return k;
}

std::string SearchContext::key_string(const Model& m) const {
  std::string s;
  bool first = true;
  for (std::size_t j : tree_order_) {
    if (!m.logic[j]) continue;
    if (!first) s += ',';
    s += tree_keys_[j];
    first = false;
  }
  s += ';';
  first = true;
  for (std::size_t j : fixed_order_) {
    if (!m.fixed[j]) continue;
    if (!first) s += ',';
    s += data_.z_names[j];
    first = false;
  }
  return s;
}

double SearchContext::log_target(const Model& m) {
  if (!is_admissible(m, prior_)) return kMinusInf;
  const std::string k = key_string(m);
  if (const ModelRecord* rec = registry_.find(k)) {
    registry_.touch(k);
    return rec->log_target();
  }
  ModelFit fit = estimator_(m);
  ++evaluations_;

  ModelRecord rec;
  rec.key = key(m);
  rec.log_marglik = fit.log_marglik;
  rec.log_prior = log_model_prior(m, complexity_, prior_.log_a);
  if (fit.coefficients.size() > 0) {
    // Design order (population order) -> key order.
    std::vector<Eigen::Index> pos(m.dimension(), -1);
    Eigen::Index c = 1;
    for (std::size_t j = 0; j < m.dimension(); ++j)
      if (m[j]) pos[j] = c++;
    Eigen::VectorXd coef(c);
    coef(0) = fit.coefficients(0);
    Eigen::Index o = 1;
    for (std::size_t j : tree_order_)
      if (m.logic[j]) coef(o++) = fit.coefficients(pos[j]);
    for (std::size_t j : fixed_order_)
      if (m.fixed[j]) coef(o++) = fit.coefficients(pos[pop_.size() + j]);
    rec.coefficients = std::move(coef);
  }
  const double target = rec.log_target();
  registry_.insert(std::move(rec));
  return target;
}

Model local_step(SearchContext& ctx, const Model& state, Rng& rng, const MjParams& params, StepInfo* info) {
  const std::size_t hi = std::min(params.max_flip, ctx.dimension());
  const std::size_t lo = std::min(params.min_flip, hi);
  Model proposal = flip_random(state, uniform_size(rng, lo, hi), rng);
  const double current = ctx.log_target(state);
  const double proposed = ctx.log_target(proposal);
  const double log_ratio = proposed - current;
  const bool ok = std::isfinite(proposed) && accept(log_ratio, rng);
  if (info) *info = StepInfo{MoveType::Local, ok, log_ratio};
  return ok ? proposal : state;
}

Model greedy_optimize(SearchContext& ctx, const Model& start, std::size_t max_steps) {
  Model m = start;
  double current = ctx.log_target(m);
  for (std::size_t step = 0; step < max_steps; ++step) {
    std::size_t best = m.dimension();
    double best_value = current;
    for (std::size_t j = 0; j < m.dimension(); ++j) {
      m.flip(j);
      const double v = ctx.log_target(m);
      m.flip(j);
      if (v > best_value) {
        best_value = v;
        best = j;
      }
    }
    if (best == m.dimension()) break;
    m.flip(best);
    current = best_value;
  }
  return m;
}

double mode_jump_log_ratio(double lt_current, double lt_proposal, std::size_t h_backward, std::size_t h_forward,
                           double eps) {
  const double dh = static_cast<double>(h_backward) - static_cast<double>(h_forward);
  return (lt_proposal - lt_current) + dh * (std::log(eps) - std::log1p(-eps));
}

Model mode_jump_step(SearchContext& ctx, const Model& state, Rng& rng, const MjParams& params, StepInfo* info) {
  const std::size_t hi = std::min(params.max_jump_flip, ctx.dimension());
  const std::size_t lo = std::min(params.min_jump_flip, hi);
  const double eps = params.randomization;

  const Model jumped = flip_random(state, uniform_size(rng, lo, hi), rng);
  const Model forward_opt = greedy_optimize(ctx, jumped, params.greedy_max_steps);
  Model proposal = forward_opt;
  for (std::size_t j = 0; j < proposal.dimension(); ++j)
    if (uniform01(rng) < eps) proposal.flip(j);

  const double current = ctx.log_target(state);
  const double proposed = ctx.log_target(proposal);
  if (!std::isfinite(proposed)) {
    if (info) *info = StepInfo{MoveType::ModeJump, false, kMinusInf};
    return state;
  }

  const Model back_jumped = flip_random(proposal, uniform_size(rng, lo, hi), rng);
  const Model backward_opt = greedy_optimize(ctx, back_jumped, params.greedy_max_steps);
  const double log_ratio =
      mode_jump_log_ratio(current, proposed, hamming(state, backward_opt), hamming(proposal, forward_opt), eps);
  const bool ok = accept(log_ratio, rng);
  if (info) *info = StepInfo{MoveType::ModeJump, ok, log_ratio};
  return ok ? proposal : state;
}

void run_chain(SearchContext& ctx, Model& state, const MjParams& params, Rng& rng, MoveStats& stats,
               std::vector<std::string>* trace, std::ostream* dump) {
  ctx.log_target(state);
  if (trace) trace->reserve(trace->size() + params.n_iter);
  for (std::size_t it = 0; it < params.n_iter; ++it) {
    StepInfo info;
    if (uniform01(rng) < params.jump_probability) {
      state = mode_jump_step(ctx, state, rng, params, &info);
      ++stats.jumps;
      stats.jumps_accepted += info.accepted;
    } else {
      state = local_step(ctx, state, rng, params, &info);
      ++stats.local;
      stats.local_accepted += info.accepted;
    }
    if (trace || dump) {
      std::string k = ctx.key_string(state);
      if (dump) {
        *dump << it << '\t' << (info.move == MoveType::Local ? "local" : "jump") << '\t' << int(info.accepted)
              << '\t' << ctx.log_target(state) << '\t' << k << '\n';
      }
      if (trace) trace->push_back(std::move(k));
    }
  }
}

MjRunResult run_mjmcmc(const Population& pop, const Dataset& data, const MjParams& params, std::uint64_t seed,
                       const MjOptions& options) {
  const PriorConfig prior = options.prior.value_or(PriorConfig::for_p(static_cast<std::size_t>(data.p())));
  MjRunResult result{VisitedRegistry(options.registry_capacity), {}, {}, {}, 0};
  SearchContext ctx(pop, data, prior, options.estimator, result.registry);
  params.validate(ctx.dimension());
  Model state = options.initial.value_or(ctx.empty_model());
  if (state.logic.size() != pop.size() || state.fixed.size() != static_cast<std::size_t>(data.q_fixed()))
    throw InvalidArgument("run_mjmcmc: initial model does not match the population");
  Rng rng = make_rng(seed);
  run_chain(ctx, state, params, rng, result.stats, options.keep_trace ? &result.trace : nullptr, options.trace_dump);
  result.final_state = std::move(state);
  result.evaluations = ctx.evaluations();
  return result;
}

}  // namespace blr
