#include "blr/gmjmcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace blr {

void GmjConfig::validate() const {
  auto bad = [](const std::string& what) { throw InvalidArgument("GMJMCMC configuration: " + what); };
  if (d < 1) bad("d must be positive");
  if (d1 > d) bad("d1 must not exceed d");
  if (c_max < 1) bad("c_max must be positive");
  if (k_max < 1) bad("k_max must be positive");
  if (!(p_and > 0 && p_and < 1)) bad("p_and must lie in (0, 1)");
  if (!(p_not >= 0 && p_not < 1)) bad("p_not must lie in [0, 1)");
  if (!(rho_min > 0 && rho_min < 1)) bad("rho_min must lie in (0, 1)");
  if (!(report_threshold >= 0 && report_threshold < 1)) bad("report threshold must lie in [0, 1)");
  if (!(p_fresh_leaf >= 0 && p_fresh_leaf <= 1)) bad("p_fresh_leaf must lie in [0, 1]");
  if (t_max < 1) bad("t_max must be positive");
  if (m_fin < 1) bad("m_fin must be positive");
  if (chains < 1) bad("chains must be positive");
  if (log_a && !(*log_a < 0)) bad("log_a must be negative");
  if (d - d1 < k_max)
    std::clog << "warning: d - d1 = " << d - d1 << " < k_max = " << k_max
              << "; some models of size k_max cannot be reached\n";
}

PriorConfig GmjConfig::prior(std::size_t p) const {
  PriorConfig cfg = PriorConfig::for_p(p, k_max);
  if (log_a) cfg.log_a = *log_a;
  cfg.measure = measure;
  return cfg;
}

bool admissible_candidate(const BitColumn& column, const std::vector<BitColumn>& existing) {
  if (is_constant(column)) return false;
  for (const auto& e : existing)
    if (classify_columns(column, e) != Equivalence::Distinct) return false;
  return true;
}

namespace {

double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double den = ac.norm() * bc.norm();
  return den > 0 ? std::abs(ac.dot(bc)) / den : 0.0;
}

std::size_t weighted_index(const std::vector<double>& w, Rng& rng) {
  return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Pre-order node visitor that rebuilds the tree, transforming node `target`.
template <typename F>
LogicTree rebuild_at(const LogicTree& t, int& counter, int target, bool internal_only, F&& fn) {
  const bool counts = !internal_only || !t.is_leaf();
  const int mine = counts ? counter++ : -1;
  if (mine == target) return fn(t);
  if (t.is_leaf()) return t;
  LogicTree l = rebuild_at(t.lhs(), counter, target, internal_only, fn);
  LogicTree r = rebuild_at(t.rhs(), counter, target, internal_only, fn);
  return LogicTree::join(t.op(), std::move(l), std::move(r), t.negated());
}

LogicTree remove_leaf(const LogicTree& t, int& counter, int target, bool& removed) {
  if (t.is_leaf()) {
    ++counter;
    return t;
  }
  auto is_target_leaf = [&](const LogicTree& c) { return c.is_leaf() && counter == target; };
  if (is_target_leaf(t.lhs())) {
    removed = true;
    return t.negated() ? t.rhs().negate() : t.rhs();
  }
  LogicTree l = remove_leaf(t.lhs(), counter, target, removed);
  if (removed) return LogicTree::join(t.op(), std::move(l), t.rhs(), t.negated());
  if (is_target_leaf(t.rhs())) {
    removed = true;
    return t.negated() ? t.lhs().negate() : t.lhs();
  }
  LogicTree r = remove_leaf(t.rhs(), counter, target, removed);
  return LogicTree::join(t.op(), t.lhs(), std::move(r), t.negated());
}

}  // namespace

Population init_population(const Dataset& data, const GmjConfig& cfg) {
  if (data.rows() < 3) throw InvalidArgument("init_population: need at least 3 observations");
  if (data.p() < 1) throw InvalidArgument("init_population: no binary covariates");
  const Eigen::Index p = data.p();
  std::vector<double> score(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) score[j] = abs_correlation(data.x.col(j).cast<double>(), data.y);
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });

  Population pop;
  std::vector<BitColumn> cols;
  std::vector<int> leaves;
  for (int j : order) {
    if (pop.size() >= cfg.d) break;
    BitColumn c = data.x.col(j);
    if (!admissible_candidate(c, cols)) continue;
    pop.trees.push_back(LogicTree::leaf(j));
    cols.push_back(std::move(c));
    leaves.push_back(j);
  }
  // Fewer informative leaves than d: pad with conjunctions of the strongest ones.
  for (std::size_t a = 0; a < leaves.size() && pop.size() < cfg.d && cfg.c_max >= 2; ++a) {
    for (std::size_t b = a + 1; b < leaves.size() && pop.size() < cfg.d; ++b) {
      LogicTree t = canonicalize_up_to_complement(
          LogicTree::join(Op::And, LogicTree::leaf(leaves[a]), LogicTree::leaf(leaves[b])));
      BitColumn c = evaluate(t, data.x);
      if (!admissible_candidate(c, cols)) continue;
      pop.trees.push_back(t);
      cols.push_back(std::move(c));
    }
  }
  pop.protected_count = std::min(cfg.d1, pop.size());
  pop.generation = 1;
  return pop;
}

LogicTree crossover(const LogicTree& a, const LogicTree& b, const GmjConfig& cfg, Rng& rng) {
  const Op op = uniform01(rng) < cfg.p_and ? Op::And : Op::Or;
  const bool neg = uniform01(rng) < cfg.p_not;
  return LogicTree::join(op, a, b, neg);
}

LogicTree modification(const LogicTree& parent, const GmjConfig& cfg, Rng& rng) {
  const int internal = parent.node_count() - parent.leaf_count();
  int counter = 0;
  if (internal == 0 || uniform01(rng) < cfg.p_not) {
    const int target = std::uniform_int_distribution<int>(0, parent.node_count() - 1)(rng);
    return rebuild_at(parent, counter, target, false, [](const LogicTree& t) { return t.negate(); });
  }
  const int target = std::uniform_int_distribution<int>(0, internal - 1)(rng);
  return rebuild_at(parent, counter, target, true, [](const LogicTree& t) {
    return LogicTree::join(t.op() == Op::And ? Op::Or : Op::And, t.lhs(), t.rhs(), t.negated());
  });
}

LogicTree reduction(const LogicTree& parent, int leaf) {
  if (parent.is_leaf()) throw InvalidArgument("reduction needs a tree with at least two leaves");
  if (leaf < 0 || leaf >= parent.leaf_count()) throw InvalidArgument("reduction: leaf position out of range");
  int counter = 0;
  bool removed = false;
  return remove_leaf(parent, counter, leaf, removed);
}

std::optional<LogicTree> generate_candidate(Operator kind, const Population& pop, const std::vector<double>& inclusion,
                                            const GmjConfig& cfg, Rng& rng) {
  if (pop.trees.empty()) return std::nullopt;
  if (inclusion.size() != pop.size()) throw InvalidArgument("generate_candidate: inclusion does not match population");
  std::vector<double> w(pop.size());
  for (std::size_t j = 0; j < pop.size(); ++j) w[j] = std::max(0.0, inclusion[j]) + 0.01;

  auto finish = [&](const LogicTree& t) -> std::optional<LogicTree> {
    LogicTree c = canonicalize_up_to_complement(t);
    if (c.leaf_count() > cfg.c_max) return std::nullopt;
    return c;
  };

  switch (kind) {
    case Operator::Crossover: {
      if (pop.size() < 2) return std::nullopt;
      for (std::size_t attempt = 0; attempt < cfg.retry_budget; ++attempt) {
        const std::size_t a = weighted_index(w, rng);
        std::vector<double> wb = w;
        wb[a] = 0;
        const std::size_t b = weighted_index(wb, rng);
        if (pop.trees[a].leaf_count() + pop.trees[b].leaf_count() > cfg.c_max) continue;
        return finish(crossover(pop.trees[a], pop.trees[b], cfg, rng));
      }
      return std::nullopt;
    }
    case Operator::Modification:
    case Operator::Reduction: {
      // Both operators need an internal node to act on.
      std::vector<double> wc = w;
      bool any = false;
      for (std::size_t j = 0; j < pop.size(); ++j) {
        if (pop.trees[j].leaf_count() < 2) wc[j] = 0;
        any = any || wc[j] > 0;
      }
      if (!any) return std::nullopt;
      const LogicTree& parent = pop.trees[weighted_index(wc, rng)];
      if (kind == Operator::Modification) return finish(modification(parent, cfg, rng));
      const int leaf = std::uniform_int_distribution<int>(0, parent.leaf_count() - 1)(rng);
      return finish(reduction(parent, leaf));
    }
  }
  return std::nullopt;
}

InclusionMap inclusion_map(const VisitedRegistry& registry) {
  const Posterior post = posterior_renormalized(registry);
  InclusionMap out;
  for (const auto* rec : registry.records()) {
    const double pr = post.at(rec->key.str());
    for (const auto& t : rec->key.trees) out[t] += pr;
    for (const auto& f : rec->key.fixed) out[f] += pr;
  }
  for (auto& [k, v] : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<double> marginal_inclusion(const VisitedRegistry& registry, const Population& pop) {
  const InclusionMap map = inclusion_map(registry);
  std::vector<double> out(pop.size(), 0.0);
  for (std::size_t j = 0; j < pop.size(); ++j) {
    auto it = map.find(to_string(pop.trees[j]));
    if (it != map.end()) out[j] = it->second;
  }
  return out;
}

Population evolve_population(const Population& pop, const std::vector<double>& inclusion, const Dataset& data,
                             const GmjConfig& cfg, Rng& rng, EvolutionStats* stats) {
  if (inclusion.size() != pop.size()) throw InvalidArgument("evolve_population: inclusion does not match population");
  EvolutionStats local;
  Population next;
  next.protected_count = pop.protected_count;
  next.generation = pop.generation + 1;
  std::vector<BitColumn> cols;
  for (std::size_t j = 0; j < pop.size(); ++j) {
    const bool drop = j >= pop.protected_count && inclusion[j] < cfg.rho_min && uniform01(rng) < 1.0 - inclusion[j];
    if (drop) {
      ++local.removed;
      continue;
    }
    next.trees.push_back(pop.trees[j]);
    cols.push_back(evaluate(pop.trees[j], data.x));
  }

  static constexpr Operator kinds[] = {Operator::Crossover, Operator::Modification, Operator::Reduction};
  const auto p = static_cast<int>(data.p());
  while (next.size() < cfg.d) {
    bool filled = false;
    for (std::size_t attempt = 0; attempt < cfg.retry_budget && !filled; ++attempt) {
      std::optional<LogicTree> cand;
      if (uniform01(rng) < cfg.p_fresh_leaf) {
        cand = LogicTree::leaf(std::uniform_int_distribution<int>(0, p - 1)(rng));
      } else {
        const Operator kind = kinds[std::uniform_int_distribution<int>(0, 2)(rng)];
        cand = generate_candidate(kind, pop, inclusion, cfg, rng);
      }
      if (!cand || cand->leaf_count() > cfg.c_max) {
        ++local.rejected;
        continue;
      }
      BitColumn c = evaluate(*cand, data.x);
      if (!admissible_candidate(c, cols)) {
        ++local.rejected;
        continue;
      }
      next.trees.push_back(std::move(*cand));
      cols.push_back(std::move(c));
      ++local.added;
      filled = true;
    }
    if (!filled) {
      ++local.unfilled;
      std::clog << "warning: generation " << next.generation << ": could not fill a vacancy within "
                << cfg.retry_budget << " draws; population shrinks to " << next.size() << '\n';
      break;
    }
  }
  if (stats) *stats = local;
  return next;
}

namespace {

Model reexpress(const ModelKey& key, const Population& pop, const Dataset& data) {
  Model m(pop.size(), static_cast<std::size_t>(data.q_fixed()));
  for (std::size_t j = 0; j < pop.size(); ++j) {
    const std::string s = to_string(pop.trees[j]);
    m.logic[j] = std::find(key.trees.begin(), key.trees.end(), s) != key.trees.end();
  }
  for (std::size_t j = 0; j < m.fixed.size(); ++j)
    m.fixed[j] = std::find(key.fixed.begin(), key.fixed.end(), data.z_names[j]) != key.fixed.end();
  return m;
}

}  // namespace

ChainResult run_gmjmcmc(const Dataset& data, const GmjConfig& cfg, std::uint64_t seed, const GmjOptions& options) {
  cfg.validate();
  data.validate();
  const PriorConfig prior = cfg.prior(static_cast<std::size_t>(data.p()));
  Rng rng = make_rng(seed);
  Population pop = init_population(data, cfg);
  if (options.on_generation) options.on_generation(pop);
  Model state(pop.size(), static_cast<std::size_t>(data.q_fixed()));

  for (std::size_t t = 1; t < cfg.t_max; ++t) {
    VisitedRegistry registry(cfg.m_fin);
    SearchContext ctx(pop, data, prior, options.estimator, registry);
    MoveStats stats;
    run_chain(ctx, state, cfg.exploratory.clamped(ctx.dimension()), rng, stats);
    const std::vector<double> incl = marginal_inclusion(registry, pop);
    const ModelKey best = registry.best().key;
    pop = evolve_population(pop, incl, data, cfg, rng);
    if (options.on_generation) options.on_generation(pop);
    state = reexpress(best, pop, data);
  }

  ChainResult result{pop, VisitedRegistry(cfg.m_fin), {}, 0.0};
  SearchContext ctx(result.population, data, prior, options.estimator, result.registry);
  MoveStats stats;
  run_chain(ctx, state, cfg.final_stage.clamped(ctx.dimension()), rng, stats);
  result.inclusion = inclusion_map(result.registry);
  for (const auto& t : result.population.trees) result.inclusion.emplace(to_string(t), 0.0);
  for (const auto& f : data.z_names) result.inclusion.emplace(f, 0.0);
  result.log_mass = result.registry.log_mass();
  return result;
}

AggregateReport aggregate_chains(const std::vector<ChainResult>& results, AggregationMode mode) {
  if (results.empty()) throw InvalidArgument("aggregate_chains: no chain results");
  AggregateReport out;
  out.mode = mode;
  if (mode == AggregationMode::Weighted) {
    std::vector<double> masses;
    for (const auto& r : results) masses.push_back(r.log_mass);
    const double total = log_sum_exp(masses);
    for (double m : masses) out.weights.push_back(std::exp(m - total));
    for (std::size_t r = 0; r < results.size(); ++r)
      for (const auto& [expr, rho] : results[r].inclusion) out.inclusion[expr] += out.weights[r] * rho;
    for (auto& [k, v] : out.inclusion) v = std::clamp(v, 0.0, 1.0);
    return out;
  }
  std::size_t cap = 0;
  for (const auto& r : results) cap += r.registry.size();
  VisitedRegistry merged(std::max<std::size_t>(cap, 1));
  for (const auto& r : results)
    for (const auto* rec : r.registry.records())
      if (!merged.find(rec->key.str())) merged.insert(*rec);
  out.inclusion = inclusion_map(merged);
  for (const auto& r : results)
    for (const auto& [expr, rho] : r.inclusion) out.inclusion.emplace(expr, 0.0);
  out.weights.assign(results.size(), 1.0 / static_cast<double>(results.size()));
  return out;
}

std::vector<ChainResult> run_chains(const Dataset& data, const GmjConfig& cfg, std::uint64_t seed, unsigned threads,
                                    const GmjOptions& options) {
  const std::size_t n = cfg.chains;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::optional<ChainResult>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        // Each chain draws its seed from its own stream of the run seed.
        const std::uint64_t chain_seed = make_rng(seed, i)();
        slots[i] = run_gmjmcmc(data, cfg, chain_seed, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ChainResult> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Report report_expressions(const AggregateReport& agg, double threshold) {
  Report out;
  for (const auto& [expr, p] : agg.inclusion)
    if (p >= threshold) out.emplace_back(expr, p);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

void write_report(std::ostream& out, const Report& report) {
  out << "expression\tprobability\n";
  const auto old = out.precision(15);
  for (const auto& [expr, p] : report) out << expr << '\t' << p << '\n';
  out.precision(old);
}

Report read_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("expression\tprobability", 0) != 0)
    throw InvalidArgument("report: missing 'expression<TAB>probability' header");
  Report out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw InvalidArgument("report: malformed line '" + line + "'");
    out.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
  }
  return out;
}

void write_registry(std::ostream& out, const VisitedRegistry& registry) {
  const Posterior post = posterior_renormalized(registry);
  out << "model\tlog_marglik\tlog_prior\tposterior\n";
  const auto old = out.precision(15);
  for (const auto* rec : registry.records()) {
    const std::string k = rec->key.str();
    out << k << '\t' << rec->log_marglik << '\t' << rec->log_prior << '\t' << post.at(k) << '\n';
  }
  out.precision(old);
}

}  // namespace blr
