#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace blr {

/// n x p matrix of binary covariates (entries 0/1), column-major.
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
/// A materialized tree evaluation, one 0/1 entry per row.
using BitColumn = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

enum class Op : std::uint8_t { And, Or };

/// Immutable Boolean expression over binary covariates.
///
/// Leaves carry a 0-based covariate index; internal nodes carry AND/OR with
/// exactly two children. Every node may be negated, the negation applying after
/// the node's own operator. Nodes are shared, so copies are cheap and the type is
/// safe to share across threads.
class LogicTree {
 public:
  static LogicTree leaf(int index, bool negated = false);
  static LogicTree join(Op op, LogicTree lhs, LogicTree rhs, bool negated = false);

  bool is_leaf() const noexcept;
  bool negated() const noexcept;
  int index() const;  // leaves only
  Op op() const;      // internal nodes only
  const LogicTree& lhs() const;
  const LogicTree& rhs() const;

  int leaf_count() const noexcept;
  int node_count() const noexcept;
  int max_index() const noexcept;

  /// Same tree with the root negation toggled.
  LogicTree negate() const;
  LogicTree with_negation(bool negated) const;

  /// Covariate index of every leaf occurrence, left to right.
  std::vector<int> leaves() const;

  friend bool operator==(const LogicTree& a, const LogicTree& b);

 private:
  struct Node;
  explicit LogicTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Total order on trees used for canonical operand ordering: leaves before
/// internal nodes, leaves by index, internal nodes by size then structure.
int compare(const LogicTree& a, const LogicTree& b);

BitColumn evaluate(const LogicTree& tree, const BinaryMatrix& data);

enum class ComplexityMeasure { LeafCount, NodeCount };

/// Leaf occurrences by default; NodeCount adds the operator nodes.
int complexity(const LogicTree& tree, ComplexityMeasure measure = ComplexityMeasure::LeafCount);

/// Deterministic rendering: "X<index+1>" leaves, "!" prefix, "(a&b)" / "(a|b)",
/// operands of each node in canonical order.
std::string to_string(const LogicTree& tree);

/// Parses expr := leaf | "!" expr | "(" expr ("&"|"|") expr ")"; leaf := "X" digits.
/// Surrounding whitespace is ignored.
LogicTree parse_expression(std::string_view text);

/// Truth-preserving normal form: negations pushed to the leaves, nested
/// same-operator chains flattened, operands sorted and deduplicated, then
/// rebuilt right-nested.
LogicTree canonicalize(const LogicTree& tree);

/// Representative of {t, !t}: in a linear model with intercept both carry the
/// same signal. Picks the canonical form with fewer negated leaves, ties broken
/// by compare().
LogicTree canonicalize_up_to_complement(const LogicTree& tree);

enum class Equivalence { Identical, Negated, Distinct, Degenerate };

/// Classifies two materialized columns. A constant column is Degenerate;
/// otherwise the Pearson correlation of binary columns is +1 / -1 exactly when
/// the columns agree / are complementary everywhere.
Equivalence classify_columns(const BitColumn& a, const BitColumn& b);
bool is_constant(const BitColumn& column);

Equivalence data_equivalent(const LogicTree& t1, const LogicTree& t2, const BinaryMatrix& data);

struct TruthComparison {
  bool equivalent = false;  // equal on every assignment
  bool complement = false;  // opposite on every assignment
};

/// Exhaustive comparison over all assignments of the union of leaf variables.
/// Throws InvalidArgument when more than 20 distinct variables are involved.
TruthComparison truth_equivalent(const LogicTree& t1, const LogicTree& t2);

inline constexpr int kMaxTruthTableVariables = 20;

}  // namespace blr
