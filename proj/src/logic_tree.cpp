#include "blr/logic_tree.hpp"

#include "blr/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace blr {

struct LogicTree::Node {
  int index = -1;
  Op op = Op::And;
  bool negated = false;
  LogicTree lhs{nullptr};
  LogicTree rhs{nullptr};
  int leaves = 1;
  int nodes = 1;
  int max_index = -1;
};

LogicTree LogicTree::leaf(int index, bool negated) {
  if (index < 0) throw IndexError(index, 0);
  auto node = std::make_shared<Node>();
  node->index = index;
  node->negated = negated;
  node->max_index = index;
  return LogicTree(std::move(node));
}

LogicTree LogicTree::join(Op op, LogicTree lhs, LogicTree rhs, bool negated) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->negated = negated;
  node->leaves = lhs.leaf_count() + rhs.leaf_count();
  node->nodes = lhs.node_count() + rhs.node_count() + 1;
  node->max_index = std::max(lhs.max_index(), rhs.max_index());
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return LogicTree(std::move(node));
}

bool LogicTree::is_leaf() const noexcept { return node_->index >= 0; }
bool LogicTree::negated() const noexcept { return node_->negated; }

int LogicTree::index() const {
  if (!is_leaf()) throw InvalidArgument("index() called on an internal node");
  return node_->index;
}

Op LogicTree::op() const {
  if (is_leaf()) throw InvalidArgument("op() called on a leaf");
  return node_->op;
}

const LogicTree& LogicTree::lhs() const {
  if (is_leaf()) throw InvalidArgument("lhs() called on a leaf");
  return node_->lhs;
}

const LogicTree& LogicTree::rhs() const {
  if (is_leaf()) throw InvalidArgument("rhs() called on a leaf");
  return node_->rhs;
}

int LogicTree::leaf_count() const noexcept { return node_->leaves; }
int LogicTree::node_count() const noexcept { return node_->nodes; }
int LogicTree::max_index() const noexcept { return node_->max_index; }

LogicTree LogicTree::negate() const { return with_negation(!negated()); }

LogicTree LogicTree::with_negation(bool negated) const {
  if (negated == this->negated()) return *this;
  if (is_leaf()) return leaf(node_->index, negated);
  return join(node_->op, node_->lhs, node_->rhs, negated);
}

std::vector<int> LogicTree::leaves() const {
  std::vector<int> out;
  out.reserve(leaf_count());
  auto walk = [&](auto&& self, const LogicTree& t) -> void {
    if (t.is_leaf()) {
      out.push_back(t.index());
      return;
    }
    self(self, t.lhs());
    self(self, t.rhs());
  };
  walk(walk, *this);
  return out;
}

bool operator==(const LogicTree& a, const LogicTree& b) {
  if (a.node_ == b.node_) return true;
  if (a.is_leaf() != b.is_leaf() || a.negated() != b.negated()) return false;
  if (a.is_leaf()) return a.index() == b.index();
  return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
}

namespace {

// Children of an internal node in canonical order.
std::pair<const LogicTree*, const LogicTree*> ordered_children(const LogicTree& t) {
  const LogicTree* l = &t.lhs();
  const LogicTree* r = &t.rhs();
  if (compare(*r, *l) < 0) std::swap(l, r);
  return {l, r};
}

}  // namespace

int compare(const LogicTree& a, const LogicTree& b) {
  if (a.is_leaf() && b.is_leaf()) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    if (a.negated() != b.negated()) return a.negated() ? 1 : -1;
    return 0;
  }
  if (a.is_leaf() != b.is_leaf()) return a.is_leaf() ? -1 : 1;
  if (a.leaf_count() != b.leaf_count()) return a.leaf_count() < b.leaf_count() ? -1 : 1;
  if (a.op() != b.op()) return a.op() == Op::And ? -1 : 1;
  if (a.negated() != b.negated()) return a.negated() ? 1 : -1;
  auto [al, ar] = ordered_children(a);
  auto [bl, br] = ordered_children(b);
  if (int c = compare(*al, *bl); c != 0) return c;
  return compare(*ar, *br);
}

namespace {

void check_indices(const LogicTree& tree, Eigen::Index cols) {
  if (tree.max_index() < cols) return;
  for (int idx : tree.leaves()) {
    if (idx >= cols) throw IndexError(idx, static_cast<long>(cols));
  }
}

BitColumn evaluate_unchecked(const LogicTree& tree, const BinaryMatrix& data) {
  BitColumn out;
  if (tree.is_leaf()) {
    out = data.col(tree.index());
  } else {
    BitColumn l = evaluate_unchecked(tree.lhs(), data);
    BitColumn r = evaluate_unchecked(tree.rhs(), data);
    if (tree.op() == Op::And)
      out = l.cwiseProduct(r);
    else
      out = l.cwiseMax(r);
  }
  if (tree.negated()) out = BitColumn::Ones(out.size()) - out;
  return out;
}

}  // namespace

BitColumn evaluate(const LogicTree& tree, const BinaryMatrix& data) {
  check_indices(tree, data.cols());
  return evaluate_unchecked(tree, data);
}

int complexity(const LogicTree& tree, ComplexityMeasure measure) {
  return measure == ComplexityMeasure::LeafCount ? tree.leaf_count() : tree.node_count();
}

std::string to_string(const LogicTree& tree) {
  std::string out;
  auto render = [&](auto&& self, const LogicTree& t) -> void {
    if (t.negated()) out += '!';
    if (t.is_leaf()) {
      out += 'X';
      out += std::to_string(t.index() + 1);
      return;
    }
    auto [l, r] = ordered_children(t);
    out += '(';
    self(self, *l);
    out += t.op() == Op::And ? '&' : '|';
    self(self, *r);
    out += ')';
  };
  render(render, tree);
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  LogicTree parse() {
    LogicTree t = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(std::string(text_), pos_, what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  LogicTree expr() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '!') {
      ++pos_;
      return expr().negate();
    }
    if (c == '(') {
      ++pos_;
      LogicTree lhs = expr();
      skip_ws();
      if (pos_ >= text_.size()) fail("expected '&' or '|'");
      Op op;
      if (text_[pos_] == '&') {
        op = Op::And;
      } else if (text_[pos_] == '|') {
        op = Op::Or;
      } else {
        fail("expected '&' or '|'");
      }
      ++pos_;
      LogicTree rhs = expr();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return LogicTree::join(op, std::move(lhs), std::move(rhs));
    }
    if (c == 'X') {
      ++pos_;
      std::size_t start = pos_;
      long value = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        value = value * 10 + (text_[pos_] - '0');
        if (value > 1'000'000'000) fail("leaf index too large");
        ++pos_;
      }
      if (pos_ == start) fail("expected digits after 'X'");
      if (value < 1) fail("leaf indices start at X1");
      return LogicTree::leaf(static_cast<int>(value - 1));
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Negation normal form: negations only on leaves.
LogicTree push_negations(const LogicTree& t, bool negate) {
  bool n = negate != t.negated();
  if (t.is_leaf()) return LogicTree::leaf(t.index(), n);
  Op op = t.op();
  if (n) op = op == Op::And ? Op::Or : Op::And;
  return LogicTree::join(op, push_negations(t.lhs(), n), push_negations(t.rhs(), n));
}

void collect_operands(const LogicTree& t, Op op, std::vector<LogicTree>& out) {
  if (!t.is_leaf() && !t.negated() && t.op() == op) {
    collect_operands(t.lhs(), op, out);
    collect_operands(t.rhs(), op, out);
  } else {
    out.push_back(t);
  }
}

LogicTree normalize_nnf(const LogicTree& t) {
  if (t.is_leaf()) return t;
  const Op op = t.op();
  std::vector<LogicTree> operands;
  collect_operands(t, op, operands);
  for (auto& o : operands) o = normalize_nnf(o);
  // Normalizing an operand can expose another same-operator chain.
  std::vector<LogicTree> flat;
  for (const auto& o : operands) collect_operands(o, op, flat);
  std::sort(flat.begin(), flat.end(),
            [](const LogicTree& a, const LogicTree& b) { return compare(a, b) < 0; });
  flat.erase(std::unique(flat.begin(), flat.end(),
                         [](const LogicTree& a, const LogicTree& b) { return compare(a, b) == 0; }),
             flat.end());
  LogicTree acc = flat.back();
  for (auto it = flat.rbegin() + 1; it != flat.rend(); ++it) acc = LogicTree::join(op, *it, acc);
  return acc;
}

int negated_leaves(const LogicTree& t) {
  if (t.is_leaf()) return t.negated() ? 1 : 0;
  return negated_leaves(t.lhs()) + negated_leaves(t.rhs());
}

LogicTree remap(const LogicTree& t, const std::map<int, int>& to) {
  if (t.is_leaf()) return LogicTree::leaf(to.at(t.index()), t.negated());
  return LogicTree::join(t.op(), remap(t.lhs(), to), remap(t.rhs(), to), t.negated());
}

}  // namespace

LogicTree parse_expression(std::string_view text) { return Parser(text).parse(); }

LogicTree canonicalize(const LogicTree& tree) { return normalize_nnf(push_negations(tree, false)); }

LogicTree canonicalize_up_to_complement(const LogicTree& tree) {
  LogicTree plain = canonicalize(tree);
  LogicTree flipped = canonicalize(tree.negate());
  int np = negated_leaves(plain);
  int nf = negated_leaves(flipped);
  if (np != nf) return np < nf ? plain : flipped;
  return compare(plain, flipped) <= 0 ? plain : flipped;
}

bool is_constant(const BitColumn& column) {
  if (column.size() == 0) return true;
  const std::uint8_t first = column(0);
  return (column.array() == first).all();
}

Equivalence classify_columns(const BitColumn& a, const BitColumn& b) {
  if (a.size() != b.size()) throw InvalidArgument("columns differ in length");
  if (is_constant(a) || is_constant(b)) return Equivalence::Degenerate;
  if (a == b) return Equivalence::Identical;
  if ((a.array() != b.array()).all()) return Equivalence::Negated;
  return Equivalence::Distinct;
}

Equivalence data_equivalent(const LogicTree& t1, const LogicTree& t2, const BinaryMatrix& data) {
  return classify_columns(evaluate(t1, data), evaluate(t2, data));
}

TruthComparison truth_equivalent(const LogicTree& t1, const LogicTree& t2) {
  std::map<int, int> to;
  for (int idx : t1.leaves()) to.emplace(idx, 0);
  for (int idx : t2.leaves()) to.emplace(idx, 0);
  const int k = static_cast<int>(to.size());
  if (k > kMaxTruthTableVariables) {
    throw InvalidArgument("truth_equivalent: " + std::to_string(k) +
                          " distinct variables exceed the limit of " +
                          std::to_string(kMaxTruthTableVariables) + "; use data_equivalent");
  }
  int next = 0;
  for (auto& [idx, slot] : to) slot = next++;

  const Eigen::Index rows = Eigen::Index{1} << k;
  BinaryMatrix table(rows, k);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (int c = 0; c < k; ++c) table(r, c) = static_cast<std::uint8_t>((r >> c) & 1);

  BitColumn a = evaluate(remap(t1, to), table);
  BitColumn b = evaluate(remap(t2, to), table);
  TruthComparison out;
  out.equivalent = (a.array() == b.array()).all();
  out.complement = (a.array() != b.array()).all();
  return out;
}

}  // namespace blr
