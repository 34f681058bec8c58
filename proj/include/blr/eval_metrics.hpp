#pragma once

#include "blr/data_sim.hpp"
#include "blr/gmjmcmc.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace blr {

/// Marker layout needed for windowed scoring.
struct MarkerLayout {
  GeneticMap map;
  /// Column j of the data holds map marker permutation[j].
  std::vector<Eigen::Index> permutation;
};

struct ScoreCard {
  std::vector<bool> hits;
  std::size_t false_positives = 0;
  std::size_t reported = 0;
  std::size_t wrong_leaves = 0;
  /// Window in cM; nullopt for strict scoring.
  std::optional<double> window;

  std::size_t matched() const { return reported - false_positives; }
  double fdr() const;
  double power() const;
};

/// Scores reported expressions against the generating trees. A report hits a
/// true tree when it is truth-equivalent to it or to its complement; windowed
/// scoring also accepts leaves substituted by markers within `window` cM on the
/// same chromosome. Matching is a maximum bipartite matching, so the result
/// does not depend on report order.
ScoreCard match_discoveries(const std::vector<LogicTree>& reported, const std::vector<LogicTree>& truth,
                            std::optional<double> window = std::nullopt, const MarkerLayout* layout = nullptr);
/// Parses every report expression first; throws ParseError naming the bad one.
ScoreCard match_discoveries(const Report& reported, const std::vector<LogicTree>& truth,
                            std::optional<double> window = std::nullopt, const MarkerLayout* layout = nullptr);

struct StudyConfig {
  SimulationConfig simulation;
  GmjConfig gmj;
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  AggregationMode aggregation = AggregationMode::Weighted;
  /// Also score with a cM window (QTL data only).
  std::optional<double> window;
};

struct ReplicateOutcome {
  Report report;
  ScoreCard strict;
  std::optional<ScoreCard> windowed;
};

/// One column of the summary table.
struct StudySummary {
  std::vector<std::string> tree_names;
  std::vector<double> power;
  double overall_power = 0;
  double mean_fp = 0;
  double mean_fdr = 0;
  std::size_t total_wl = 0;
};

StudySummary summarize(const std::vector<ScoreCard>& cards, const std::vector<LogicTree>& truth);

struct StudyResult {
  std::vector<ReplicateOutcome> replicates;
  StudySummary strict;
  std::optional<StudySummary> windowed;
};

/// Replicate r simulates with make_rng(seed, r) and runs its chains from a
/// seed drawn from the same stream.
StudyResult replicate_study(const StudyConfig& cfg);

/// Rows: one per true tree, "Overall Power", "FP", "FDR", "WL".
void write_study_tsv(std::ostream& out, const StudyResult& result);
void write_study_table(std::ostream& out, const StudyResult& result);

}  // namespace blr
