// Independent oracles and generators shared by the test binaries. Nothing here
// calls into the library code it is used to check.
#pragma once

#include "blr/dataset.hpp"
#include "blr/logic_tree.hpp"
#include "blr/mjmcmc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline double uniform(blr::Rng& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); }

/// Random tree with exactly `leaves` leaves over indices [0, p).
inline blr::LogicTree random_tree(blr::Rng& rng, int leaves, int p, double p_neg = 0.3) {
  if (leaves == 1)
    return blr::LogicTree::leaf(std::uniform_int_distribution<int>(0, p - 1)(rng), uniform(rng) < p_neg);
  const int left = std::uniform_int_distribution<int>(1, leaves - 1)(rng);
  return blr::LogicTree::join(uniform(rng) < 0.5 ? blr::Op::And : blr::Op::Or, random_tree(rng, left, p, p_neg),
                              random_tree(rng, leaves - left, p, p_neg), uniform(rng) < p_neg);
}

/// Direct recursive truth evaluation of one assignment.
inline bool truth(const blr::LogicTree& t, const std::vector<bool>& row) {
  bool v;
  if (t.is_leaf()) {
    v = row.at(static_cast<std::size_t>(t.index()));
  } else {
    const bool l = truth(t.lhs(), row), r = truth(t.rhs(), row);
    v = t.op() == blr::Op::And ? (l && r) : (l || r);
  }
  return t.negated() ? !v : v;
}

/// Truth table over all 2^p assignments of the first p variables.
inline std::vector<bool> table(const blr::LogicTree& t, int p) {
  std::vector<bool> out;
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    std::vector<bool> row(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) row[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
    out.push_back(truth(t, row));
  }
  return out;
}

inline blr::BinaryMatrix random_binary(Eigen::Index n, Eigen::Index p, blr::Rng& rng, double prob = 0.5) {
  blr::BinaryMatrix x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = uniform(rng) < prob ? 1 : 0;
  return x;
}

/// Least squares by the normal equations.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

/// -BIC/2 written out from the formula, full-rank designs only.
inline double bic_half(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd beta = normal_equations(x, y);
  const double rss = (y - x * beta).squaredNorm();
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(rss / n) + static_cast<double>(x.cols()) * std::log(n));
}

/// Exact posterior over every subset of single-leaf columns 0..d-1 of `data`,
/// keyed like the registry ("X1,X3;"), prior log_a per included leaf.
inline std::map<std::string, double> exact_leaf_posterior(const blr::Dataset& data, int d, double log_a) {
  std::map<std::string, double> logpost;
  const Eigen::Index n = data.rows();
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < d; ++j)
      if ((mask >> j) & 1u) cols.push_back(j);
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()) + 1);
    x.col(0).setOnes();
    std::vector<std::string> names;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      x.col(static_cast<Eigen::Index>(k) + 1) = data.x.col(cols[k]).cast<double>();
      names.push_back("X" + std::to_string(cols[k] + 1));
    }
    std::sort(names.begin(), names.end());
    std::string key;
    for (std::size_t k = 0; k < names.size(); ++k) key += (k ? "," : "") + names[k];
    key += ";";
    logpost[key] = bic_half(x, data.y) + log_a * static_cast<double>(cols.size());
  }
  double mx = -INFINITY;
  for (const auto& [k, v] : logpost) mx = std::max(mx, v);
  double total = 0;
  for (const auto& [k, v] : logpost) total += std::exp(v - mx);
  std::map<std::string, double> out;
  for (const auto& [k, v] : logpost) out[k] = std::exp(v - mx) / total;
  return out;
}

inline double tv(const std::map<std::string, double>& p, const std::map<std::string, double>& q) {
  double s = 0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    s += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) s += std::abs(v);
  return s / 2;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ac = a.array() - a.mean(), bc = b.array() - b.mean();
  return (ac * bc).sum() / std::sqrt(ac.square().sum() * bc.square().sum());
}

/// Data set with independent Bernoulli(0.5) columns and Y = 1 + sum effects_j X_j + N(0, 1).
inline blr::Dataset linear_data(Eigen::Index n, Eigen::Index p, const std::vector<double>& effects, blr::Rng& rng) {
  blr::Dataset d;
  d.x = random_binary(n, p, rng);
  d.y.resize(n);
  std::normal_distribution<double> noise;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mu = 1;
    for (std::size_t j = 0; j < effects.size(); ++j) mu += effects[j] * d.x(i, static_cast<Eigen::Index>(j));
    d.y(i) = mu + noise(rng);
  }
  d.x_names = blr::default_x_names(p);
  return d;
}

}  // namespace oracle
