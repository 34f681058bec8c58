#include "blr/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace blr {

double ScoreCard::fdr() const {
  return reported == 0 ? 0.0 : static_cast<double>(false_positives) / static_cast<double>(reported);
}

double ScoreCard::power() const {
  if (hits.empty()) return 0.0;
  return static_cast<double>(std::count(hits.begin(), hits.end(), true)) / static_cast<double>(hits.size());
}

namespace {

LogicTree remap(const LogicTree& t, const std::map<int, int>& to) {
  if (t.is_leaf()) return LogicTree::leaf(to.at(t.index()), t.negated());
  return LogicTree::join(t.op(), remap(t.lhs(), to), remap(t.rhs(), to), t.negated());
}

bool same_signal(const LogicTree& a, const LogicTree& b) {
  const TruthComparison c = truth_equivalent(a, b);
  return c.equivalent || c.complement;
}

class Windows {
 public:
  Windows(const MarkerLayout& layout, double window) : layout_(layout), window_(window) {}

  bool near(int column_a, int column_b) const {
    if (column_a == column_b) return true;
    const auto [ca, pa] = locate(column_a);
    const auto [cb, pb] = locate(column_b);
    return ca == cb && std::abs(pa - pb) <= window_ + 1e-9;
  }

 private:
  std::pair<int, double> locate(int column) const {
    if (column < 0 || static_cast<std::size_t>(column) >= layout_.permutation.size())
      throw IndexError(column, static_cast<long>(layout_.permutation.size()));
    return layout_.map.locate(layout_.permutation[static_cast<std::size_t>(column)]);
  }

  const MarkerLayout& layout_;
  double window_;
};

bool windowed_match(const LogicTree& report, const LogicTree& truth, const Windows& win) {
  if (same_signal(report, truth)) return true;
  std::vector<int> vars = report.leaves();
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  std::vector<int> true_vars = truth.leaves();
  std::sort(true_vars.begin(), true_vars.end());
  true_vars.erase(std::unique(true_vars.begin(), true_vars.end()), true_vars.end());

  std::vector<std::vector<int>> options(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    options[i].push_back(vars[i]);
    for (int u : true_vars)
      if (u != vars[i] && win.near(vars[i], u)) options[i].push_back(u);
  }
  std::map<int, int> to;
  std::function<bool(std::size_t)> search = [&](std::size_t i) {
    if (i == vars.size()) return same_signal(remap(report, to), truth);
    for (int u : options[i]) {
      to[vars[i]] = u;
      if (search(i + 1)) return true;
    }
    return false;
  };
  return search(0);
}

// Kuhn's augmenting paths; edges[r] lists the true trees report r may claim.
std::size_t max_matching(const std::vector<std::vector<std::size_t>>& edges, std::size_t n_truth,
                         std::vector<bool>& hits) {
  std::vector<long> owner(n_truth, -1);
  std::size_t matched = 0;
  for (std::size_t r = 0; r < edges.size(); ++r) {
    std::vector<bool> seen(n_truth, false);
    std::function<bool(std::size_t)> augment = [&](std::size_t v) {
      for (std::size_t t : edges[v]) {
        if (seen[t]) continue;
        seen[t] = true;
        if (owner[t] < 0 || augment(static_cast<std::size_t>(owner[t]))) {
          owner[t] = static_cast<long>(v);
          return true;
        }
      }
      return false;
    };
    if (augment(r)) ++matched;
  }
  hits.assign(n_truth, false);
  for (std::size_t t = 0; t < n_truth; ++t) hits[t] = owner[t] >= 0;
  return matched;
}

}  // namespace

ScoreCard match_discoveries(const std::vector<LogicTree>& reported, const std::vector<LogicTree>& truth,
                            std::optional<double> window, const MarkerLayout* layout) {
  if (window && !layout) throw InvalidArgument("windowed scoring needs the genetic map and column permutation");
  if (window && *window < 0) throw InvalidArgument("scoring window must be non-negative");
  std::optional<Windows> win;
  if (window) win.emplace(*layout, *window);

  std::set<int> true_leaves;
  for (const auto& t : truth)
    for (int v : t.leaves()) true_leaves.insert(v);

  ScoreCard card;
  card.window = window;
  card.reported = reported.size();
  std::vector<std::vector<std::size_t>> edges(reported.size());
  for (std::size_t r = 0; r < reported.size(); ++r) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const bool ok = win ? windowed_match(reported[r], truth[t], *win) : same_signal(reported[r], truth[t]);
      if (ok) edges[r].push_back(t);
    }
    for (int v : reported[r].leaves()) {
      bool wrong;
      if (win)
        wrong = std::none_of(true_leaves.begin(), true_leaves.end(), [&](int u) { return win->near(v, u); });
      else
        wrong = !true_leaves.count(v);
      if (wrong) ++card.wrong_leaves;
    }
  }
  const std::size_t matched = max_matching(edges, truth.size(), card.hits);
  card.false_positives = reported.size() - matched;
  return card;
}

ScoreCard match_discoveries(const Report& reported, const std::vector<LogicTree>& truth,
                            std::optional<double> window, const MarkerLayout* layout) {
  std::vector<LogicTree> trees;
  trees.reserve(reported.size());
  for (const auto& [expr, p] : reported) {
    try {
      trees.push_back(parse_expression(expr));
    } catch (const ParseError& e) {
      throw InvalidArgument("cannot score unparseable expression '" + expr + "': " + e.what());
    }
  }
  return match_discoveries(trees, truth, window, layout);
}

StudySummary summarize(const std::vector<ScoreCard>& cards, const std::vector<LogicTree>& truth) {
  StudySummary s;
  for (const auto& t : truth) s.tree_names.push_back(to_string(t));
  s.power.assign(truth.size(), 0.0);
  if (cards.empty()) return s;
  const double n = static_cast<double>(cards.size());
  for (const auto& c : cards) {
    for (std::size_t t = 0; t < truth.size() && t < c.hits.size(); ++t) s.power[t] += c.hits[t] ? 1.0 / n : 0.0;
    s.mean_fp += static_cast<double>(c.false_positives) / n;
    s.mean_fdr += c.fdr() / n;
    s.total_wl += c.wrong_leaves;
  }
  if (!truth.empty()) {
    for (double p : s.power) s.overall_power += p;
    s.overall_power /= static_cast<double>(truth.size());
  }
  return s;
}

StudyResult replicate_study(const StudyConfig& cfg) {
  if (cfg.replicates < 1) throw InvalidArgument("study: need at least one replicate");
  cfg.gmj.validate();
  const bool windowed = cfg.window && cfg.simulation.generator == Generator::Qtl;
  if (cfg.window && !windowed) std::clog << "warning: scoring window ignored for general-correlation data\n";

  StudyResult result;
  std::vector<ScoreCard> strict, wide;
  std::vector<LogicTree> truth;
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    Rng rng = make_rng(cfg.seed, r);
    Simulated sim = simulate(cfg.simulation, rng);
    const std::uint64_t chain_seed = rng();
    const auto chains = run_chains(sim.data, cfg.gmj, chain_seed, cfg.threads);
    const AggregateReport agg = aggregate_chains(chains, cfg.aggregation);

    ReplicateOutcome out;
    for (const auto& entry : report_expressions(agg, cfg.gmj.report_threshold))
      if (std::find(sim.data.z_names.begin(), sim.data.z_names.end(), entry.first) == sim.data.z_names.end())
        out.report.push_back(entry);
    truth = sim.data.truth;
    out.strict = match_discoveries(out.report, truth);
    if (windowed) {
      const MarkerLayout layout{cfg.simulation.map, sim.permutation};
      out.windowed = match_discoveries(out.report, truth, cfg.window, &layout);
      wide.push_back(*out.windowed);
    }
    strict.push_back(out.strict);
    result.replicates.push_back(std::move(out));
  }
  result.strict = summarize(strict, truth);
  if (windowed) result.windowed = summarize(wide, truth);
  return result;
}

namespace {

struct Row {
  std::string name;
  std::vector<std::string> cells;
};

std::vector<Row> study_rows(const StudyResult& result) {
  std::vector<const StudySummary*> cols{&result.strict};
  if (result.windowed) cols.push_back(&*result.windowed);
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
  };
  std::vector<Row> rows;
  for (std::size_t t = 0; t < result.strict.tree_names.size(); ++t) {
    Row row{"L" + std::to_string(t + 1) + " " + result.strict.tree_names[t], {}};
    for (const auto* c : cols) row.cells.push_back(fmt(c->power[t]));
    rows.push_back(row);
  }
  Row overall{"Overall Power", {}}, fp{"FP", {}}, fdr{"FDR", {}}, wl{"WL", {}};
  for (const auto* c : cols) {
    overall.cells.push_back(fmt(c->overall_power));
    fp.cells.push_back(fmt(c->mean_fp));
    fdr.cells.push_back(fmt(c->mean_fdr));
    wl.cells.push_back(std::to_string(c->total_wl));
  }
  rows.insert(rows.end(), {overall, fp, fdr, wl});
  return rows;
}

std::vector<std::string> study_header(const StudyResult& result) {
  std::vector<std::string> h{"row", "strict"};
  if (result.windowed) {
    std::ostringstream s;
    s << "windowed_" << result.replicates.front().windowed->window.value_or(0) << "cM";
    h.push_back(s.str());
  }
  return h;
}

}  // namespace

void write_study_tsv(std::ostream& out, const StudyResult& result) {
  const auto header = study_header(result);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << '\n';
  for (const auto& row : study_rows(result)) {
    out << row.name;
    for (const auto& c : row.cells) out << '\t' << c;
    out << '\n';
  }
}

void write_study_table(std::ostream& out, const StudyResult& result) {
  const auto header = study_header(result);
  const auto rows = study_rows(result);
  std::size_t w0 = header[0].size();
  for (const auto& r : rows) w0 = std::max(w0, r.name.size());
  std::size_t wc = 8;
  for (std::size_t i = 1; i < header.size(); ++i) wc = std::max(wc, header[i].size());
  out << std::left << std::setw(static_cast<int>(w0 + 2)) << header[0] << std::right;
  for (std::size_t i = 1; i < header.size(); ++i) out << std::setw(static_cast<int>(wc + 2)) << header[i];
  out << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(w0 + 2)) << r.name << std::right;
    for (const auto& c : r.cells) out << std::setw(static_cast<int>(wc + 2)) << c;
    out << '\n';
  }
}

}  // namespace blr
