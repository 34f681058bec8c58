#include "blr/data_sim.hpp"
#include "blr/gmjmcmc.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace blr;

namespace {

LogicTree X(int i, bool neg = false) { return LogicTree::leaf(i, neg); }

ModelRecord rec(std::vector<std::string> trees, double lt) {
  ModelRecord r;
  r.key.trees = std::move(trees);
  r.log_marglik = lt;
  return r;
}

ChainResult chain(const InclusionMap& incl, double log_mass) {
  return ChainResult{Population{}, VisitedRegistry(1), incl, log_mass};
}

GmjConfig small_config() {
  GmjConfig cfg;
  cfg.d = 10;
  cfg.k_max = 10;
  cfg.c_max = 3;
  cfg.t_max = 5;
  cfg.exploratory.n_iter = 100;
  cfg.final_stage.n_iter = 500;
  return cfg;
}

void check_population(const Population& pop, const Dataset& d, int c_max) {
  std::vector<BitColumn> cols;
  for (const auto& t : pop.trees) {
    CHECK(t.leaf_count() <= c_max);
    cols.push_back(evaluate(t, d.x));
    CHECK_FALSE(is_constant(cols.back()));
  }
  for (std::size_t a = 0; a < cols.size(); ++a)
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      const double r = oracle::pearson(cols[a].cast<double>(), cols[b].cast<double>());
      CHECK(std::abs(std::abs(r) - 1.0) > 1e-12);
    }
}

}  // namespace

TEST_CASE("init_population with p = d takes every leaf") {
  Rng rng(1);
  const Dataset d = oracle::linear_data(200, 15, {1, 1}, rng);
  GmjConfig cfg;
  cfg.d = 15;
  const Population pop = init_population(d, cfg);
  REQUIRE(pop.size() == 15);
  std::set<int> idx;
  for (const auto& t : pop.trees) {
    CHECK(t.is_leaf());
    idx.insert(t.index());
  }
  CHECK(idx.size() == 15);
}

TEST_CASE("init_population with p > d takes the strongest marginal correlations") {
  Rng rng(2);
  const Dataset d = oracle::linear_data(500, 50, {0.1, 0.9, 0, 0, 0.4, 0, 0, 0, 0, 0, 1.5}, rng);
  GmjConfig cfg;
  cfg.d = 15;
  cfg.d1 = 3;
  const Population pop = init_population(d, cfg);
  REQUIRE(pop.size() == 15);
  std::vector<std::pair<double, int>> score;
  for (int j = 0; j < 50; ++j) score.emplace_back(std::abs(oracle::pearson(d.x.col(j).cast<double>(), d.y)), j);
  std::sort(score.rbegin(), score.rend());
  std::set<int> top;
  for (int k = 0; k < 15; ++k) top.insert(score[k].second);
  for (const auto& t : pop.trees) CHECK(top.count(t.index()));
  CHECK(pop.protected_count == 3);
  CHECK(pop.trees[0].index() == score[0].second);
}

TEST_CASE("init_population skips constant columns and pads small inputs") {
  Rng rng(3);
  Dataset d = oracle::linear_data(100, 5, {1}, rng);
  d.x.col(2).setZero();
  GmjConfig cfg;
  cfg.d = 8;
  const Population pop = init_population(d, cfg);
  CHECK(pop.size() == 8);
  for (const auto& t : pop.trees)
    for (int v : t.leaves()) CHECK(v != 2);
  check_population(pop, d, cfg.c_max);
  Dataset tiny = d.subset({0, 1});
  CHECK_THROWS_AS(init_population(tiny, cfg), InvalidArgument);
}

TEST_CASE("operators") {
  Rng rng(4);
  GmjConfig cfg;
  cfg.p_and = 1;
  cfg.p_not = 0;
  CHECK(crossover(X(0), X(1), cfg, rng) == LogicTree::join(Op::And, X(0), X(1)));
  const LogicTree t = parse_expression("(X4&X10)");
  CHECK(to_string(reduction(t, 1)) == "X4");
  CHECK(to_string(reduction(t, 0)) == "X10");
  CHECK(to_string(reduction(parse_expression("!(X1&(X2|X3))"), 0)) == "!(X2|X3)");
  CHECK(to_string(reduction(parse_expression("((X1&X2)|X3)"), 1)) == "(X1|X3)");
  CHECK_THROWS_AS(reduction(X(0), 0), InvalidArgument);
}

TEST_CASE("crossover uses AND with probability p_and") {
  Rng rng(5);
  GmjConfig cfg;
  int ands = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ands += crossover(X(0), X(1), cfg, rng).op() == Op::And;
  CHECK(std::abs(ands / double(n) - 0.9) < 0.01);
}

TEST_CASE("modification keeps the leaves and changes the tree") {
  Rng rng(6);
  GmjConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const LogicTree t = oracle::random_tree(rng, 2 + i % 3, 6);
    const LogicTree m = modification(t, cfg, rng);
    auto a = t.leaves(), b = m.leaves();
    CHECK(a == b);
    CHECK_FALSE(m == t);
  }
}

TEST_CASE("generated candidates respect c_max and come in complement-canonical form") {
  Rng rng(7);
  GmjConfig cfg;
  cfg.c_max = 3;
  Population pop;
  pop.trees = {X(0), X(1), parse_expression("(X3&X4)"), parse_expression("(X5|(X6&X7))")};
  const std::vector<double> incl{0.5, 0.1, 0.9, 0.0};
  for (auto kind : {Operator::Crossover, Operator::Modification, Operator::Reduction})
    for (int i = 0; i < 300; ++i) {
      const auto c = generate_candidate(kind, pop, incl, cfg, rng);
      if (!c) continue;
      CHECK(c->leaf_count() <= 3);
      CHECK(to_string(*c) == to_string(canonicalize_up_to_complement(*c)));
    }
  Population leaves_only;
  leaves_only.trees = {X(0), X(1)};
  CHECK_FALSE(generate_candidate(Operator::Reduction, leaves_only, {0.5, 0.5}, cfg, rng).has_value());
}

TEST_CASE("evolution keeps high-inclusion trees and drops zero-inclusion ones") {
  Rng rng(8);
  const Dataset d = oracle::linear_data(200, 12, {1}, rng);
  GmjConfig cfg;
  cfg.d = 6;
  Population pop;
  for (int j = 0; j < 6; ++j) pop.trees.push_back(X(j));
  const Population same = evolve_population(pop, std::vector<double>(6, 0.5), d, cfg, rng);
  CHECK(same.trees == pop.trees);
  CHECK(same.generation == 2);

  std::vector<double> incl(6, 0.9);
  incl[2] = 0;
  EvolutionStats stats;
  const Population next = evolve_population(pop, incl, d, cfg, rng, &stats);
  CHECK(stats.removed == 1);
  CHECK(std::find(next.trees.begin(), next.trees.end(), X(2)) == next.trees.end());
  CHECK(next.size() == 6);
}

TEST_CASE("De Morgan duplicates fail the screen") {
  Rng rng(9);
  const BinaryMatrix x = oracle::random_binary(100, 3, rng);
  const LogicTree present = parse_expression("!(!X1|!X2)");
  const std::vector<BitColumn> existing{evaluate(present, x)};
  CHECK_FALSE(admissible_candidate(evaluate(parse_expression("(X1&X2)"), x), existing));
  CHECK_FALSE(admissible_candidate(evaluate(parse_expression("(!X1|!X2)"), x), existing));
  CHECK_FALSE(admissible_candidate(evaluate(parse_expression("(X1|!X1)"), x), {}));
  CHECK(admissible_candidate(evaluate(parse_expression("(X1|X2)"), x), existing));
}

TEST_CASE("property: no tautologies or duplicates over 1000 generations, protected prefix kept") {
  Rng rng(10);
  const Dataset d = oracle::linear_data(200, 20, {1, 1}, rng);
  GmjConfig cfg;
  cfg.d = 12;
  cfg.d1 = 2;
  cfg.c_max = 4;
  Population pop = init_population(d, cfg);
  const std::vector<LogicTree> prefix(pop.trees.begin(), pop.trees.begin() + 2);
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> incl(pop.size());
    for (auto& v : incl) v = oracle::uniform(rng) < 0.5 ? 0.0 : oracle::uniform(rng);
    pop = evolve_population(pop, incl, d, cfg, rng);
    REQUIRE(pop.size() == 12);
    for (std::size_t k = 0; k < 2; ++k) CHECK(pop.trees[k] == prefix[k]);
    if (g % 50 == 0 || g == 999) check_population(pop, d, cfg.c_max);
  }
}

TEST_CASE("marginal inclusion sums posterior over containing models") {
  VisitedRegistry reg;
  reg.insert(rec({"X1", "X2"}, std::log(0.5)));
  reg.insert(rec({"X1"}, std::log(0.3)));
  reg.insert(rec({"X3"}, std::log(0.2)));
  Population pop;
  pop.trees = {X(0), X(1), X(2), X(3)};
  const auto incl = marginal_inclusion(reg, pop);
  CHECK(incl[0] == doctest::Approx(0.8));
  CHECK(incl[1] == doctest::Approx(0.5));
  CHECK(incl[2] == doctest::Approx(0.2));
  CHECK(incl[3] == 0.0);
}

TEST_CASE("aggregation") {
  const auto single = aggregate_chains({chain({{"A", 0.4}, {"B", 1.0}}, -3)});
  CHECK(single.inclusion.at("A") == 0.4);
  CHECK(single.inclusion.at("B") == 1.0);

  const auto two = aggregate_chains({chain({{"A", 1.0}}, -2), chain({{"A", 0.5}}, -2)});
  CHECK(two.inclusion.at("A") == doctest::Approx(0.75));
  CHECK_THROWS_AS(aggregate_chains({}), InvalidArgument);

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    std::vector<ChainResult> cs;
    double lo = 1, hi = 0;
    for (int r = 0; r < 4; ++r) {
      const double v = oracle::uniform(rng);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      cs.push_back(chain({{"A", v}}, 10 * oracle::uniform(rng)));
    }
    const double a = aggregate_chains(cs).inclusion.at("A");
    CHECK(a >= lo - 1e-15);
    CHECK(a <= hi + 1e-15);
  }
}

TEST_CASE("union aggregation over registries that jointly enumerate a space is exact") {
  Rng rng(12);
  const Dataset d = oracle::linear_data(150, 4, {0.4, 0, 0.3}, rng);
  Population pop;
  for (int j = 0; j < 4; ++j) pop.trees.push_back(X(j));
  const double log_a = -2 * std::log(4.0);
  PriorConfig prior;
  prior.log_a = log_a;
  std::vector<ChainResult> cs;
  for (int half = 0; half < 2; ++half) {
    ChainResult c{pop, VisitedRegistry(100), {}, 0};
    SearchContext ctx(pop, d, prior, jeffreys_estimator(), c.registry);
    for (unsigned mask = 0; mask < 16; ++mask) {
      if ((mask % 2 == 0) != (half == 0) && mask != 0) continue;
      Model m(4, 0);
      for (int j = 0; j < 4; ++j) m.logic[j] = (mask >> j) & 1u;
      ctx.log_target(m);
    }
    c.inclusion = inclusion_map(c.registry);
    c.log_mass = c.registry.log_mass();
    cs.push_back(std::move(c));
  }
  const auto exact = oracle::exact_leaf_posterior(d, 4, log_a);
  const auto agg = aggregate_chains(cs, AggregationMode::Union);
  for (int j = 0; j < 4; ++j) {
    const std::string name = "X" + std::to_string(j + 1);
    double expect = 0;
    for (const auto& [key, p] : exact) {
      const auto trees = ModelKey::parse(key).trees;
      if (std::find(trees.begin(), trees.end(), name) != trees.end()) expect += p;
    }
    CHECK(agg.inclusion.at(name) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("report ordering and thresholds") {
  AggregateReport agg;
  agg.inclusion = {{"A", 0.9}, {"B", 0.4}, {"C", 0.95}};
  const Report r = report_expressions(agg, 0.5);
  REQUIRE(r.size() == 2);
  CHECK(r[0].first == "C");
  CHECK(r[1].first == "A");
  const Report all = report_expressions(agg, 0);
  CHECK(all.size() == 3);
  CHECK(all.back().first == "B");

  std::stringstream ss;
  write_report(ss, {{"(X5&X9)", 0.999999645123456789}});
  CHECK(ss.str() == "expression\tprobability\n(X5&X9)\t0.999999645123457\n");
  const Report back = read_report(ss);
  CHECK(back[0].first == "(X5&X9)");
}

TEST_CASE("GMJMCMC runs: degenerate genetic layer, determinism, registry bound") {
  Rng rng(13);
  SimulationConfig sc;
  sc.scenario = Scenario::Scenario4;
  sc.n = 400;
  const Simulated sim = simulate(sc, rng);
  GmjConfig cfg = small_config();
  cfg.t_max = 1;
  const ChainResult one = run_gmjmcmc(sim.data, cfg, 1);
  CHECK(one.population.generation == 1);

  cfg = small_config();
  cfg.m_fin = 40;
  int generations = 0;
  GmjOptions opt;
  opt.on_generation = [&](const Population& p) {
    ++generations;
    check_population(p, sim.data, cfg.c_max);
  };
  const ChainResult a = run_gmjmcmc(sim.data, cfg, 7, opt);
  const ChainResult b = run_gmjmcmc(sim.data, cfg, 7);
  CHECK(generations == static_cast<int>(cfg.t_max));
  CHECK(a.registry.size() <= 40);
  CHECK(a.inclusion == b.inclusion);
  CHECK(a.population.trees == b.population.trees);
  for (const auto& [k, v] : a.inclusion) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("parallel chains do not depend on the thread count") {
  Rng rng(14);
  SimulationConfig sc;
  sc.scenario = Scenario::Scenario4;
  sc.n = 300;
  const Simulated sim = simulate(sc, rng);
  GmjConfig cfg = small_config();
  cfg.chains = 3;
  const auto serial = run_chains(sim.data, cfg, 5, 1);
  const auto threaded = run_chains(sim.data, cfg, 5, 3);
  REQUIRE(serial.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(serial[i].inclusion == threaded[i].inclusion);
    CHECK(serial[i].log_mass == threaded[i].log_mass);
  }
  CHECK(serial[0].inclusion != serial[1].inclusion);
}

TEST_CASE("configuration validation") {
  GmjConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p_and = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GmjConfig{};
  cfg.rho_min = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GmjConfig{};
  cfg.d1 = 20;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
