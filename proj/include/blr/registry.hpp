#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace blr {

/// Population-independent identity of a model: the canonical strings of its
/// trees and the names of its non-binary covariates, each sorted.
struct ModelKey {
  std::vector<std::string> trees;
  std::vector<std::string> fixed;

  /// "t1,t2,...;f1,f2,..." -- expression strings never contain ',' or ';'.
  std::string str() const;
  static ModelKey parse(const std::string& text);
  std::size_t size() const { return trees.size() + fixed.size(); }
};

struct ModelRecord {
  ModelKey key;
  double log_marglik = 0;
  double log_prior = 0;
  /// Intercept, then one per key.trees entry, then one per key.fixed entry.
  /// Empty when the estimator does not produce coefficients.
  Eigen::VectorXd coefficients;
  std::size_t visits = 1;

  double log_target() const { return log_marglik + log_prior; }
};

/// The set of visited models, bounded by a capacity. At capacity the record
/// with the smallest target is evicted; the best record never is.
class VisitedRegistry {
 public:
  explicit VisitedRegistry(std::size_t capacity = 10000);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t evictions() const { return evictions_; }

  const ModelRecord* find(const std::string& key) const;
  /// Increments the visit counter; returns false when the key is absent.
  bool touch(const std::string& key);
  /// Inserts or replaces. Returns false when the new record was itself the
  /// eviction victim.
  bool insert(ModelRecord record);

  const ModelRecord& best() const;
  /// Records ordered by key string, for deterministic iteration.
  std::vector<const ModelRecord*> records() const;
  /// log sum over records of exp(log target).
  double log_mass() const;

 private:
  std::size_t capacity_;
  std::size_t evictions_ = 0;
  std::unordered_map<std::string, ModelRecord> records_;
  std::set<std::pair<double, std::string>> by_target_;
};

using Posterior = std::map<std::string, double>;

double log_sum_exp(const std::vector<double>& values);

/// Renormalized estimate over the visited set (max-shifted).
Posterior posterior_renormalized(const VisitedRegistry& registry);

/// Relative visit frequencies of chain states after dropping `burn_in` entries.
Posterior posterior_mc(const std::vector<std::string>& trace, std::size_t burn_in = 0);

/// Sum over keys of |p - q| / 2, missing keys counting as zero.
double total_variation(const Posterior& p, const Posterior& q);

}  // namespace blr
