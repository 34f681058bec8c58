#include "blr/registry.hpp"

#include "blr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace blr {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::string part;
  std::istringstream ss(text);
  while (std::getline(ss, part, ',')) out.push_back(part);
  return out;
}

}  // namespace

std::string ModelKey::str() const { return join(trees) + ';' + join(fixed); }

ModelKey ModelKey::parse(const std::string& text) {
  auto sep = text.find(';');
  if (sep == std::string::npos) throw InvalidArgument("malformed model key '" + text + "'");
  return ModelKey{split(text.substr(0, sep)), split(text.substr(sep + 1))};
}

VisitedRegistry::VisitedRegistry(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("registry capacity must be positive");
}

const ModelRecord* VisitedRegistry::find(const std::string& key) const {
  auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

bool VisitedRegistry::touch(const std::string& key) {
  auto it = records_.find(key);
  if (it == records_.end()) return false;
  ++it->second.visits;
  return true;
}

bool VisitedRegistry::insert(ModelRecord record) {
  if (!std::isfinite(record.log_target())) throw InvalidArgument("registry: non-finite model target");
  std::string key = record.key.str();
  const double target = record.log_target();
  if (auto it = records_.find(key); it != records_.end()) {
    by_target_.erase({it->second.log_target(), key});
    it->second = std::move(record);
  } else {
    records_.emplace(key, std::move(record));
  }
  by_target_.emplace(target, key);
  if (records_.size() <= capacity_) return true;

  // Smallest target that is not the incumbent best.
  auto victim = by_target_.begin();
  if (std::next(victim) == by_target_.end()) return true;
  const bool self = victim->second == key;
  records_.erase(victim->second);
  by_target_.erase(victim);
  ++evictions_;
  return !self;
}

const ModelRecord& VisitedRegistry::best() const {
  if (records_.empty()) throw InvalidArgument("registry is empty");
  return records_.at(by_target_.rbegin()->second);
}

std::vector<const ModelRecord*> VisitedRegistry::records() const {
  std::vector<std::pair<const std::string*, const ModelRecord*>> tmp;
  tmp.reserve(records_.size());
  for (const auto& [k, r] : records_) tmp.emplace_back(&k, &r);
  std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
  std::vector<const ModelRecord*> out;
  out.reserve(tmp.size());
  for (const auto& [k, r] : tmp) out.push_back(r);
  return out;
}

double VisitedRegistry::log_mass() const {
  std::vector<double> targets;
  targets.reserve(records_.size());
  for (const auto& [t, k] : by_target_) targets.push_back(t);
  return log_sum_exp(targets);
}

double log_sum_exp(const std::vector<double>& values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

Posterior posterior_renormalized(const VisitedRegistry& registry) {
  if (registry.empty()) throw InvalidArgument("posterior_renormalized: empty registry");
  const auto recs = registry.records();
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto* r : recs) mx = std::max(mx, r->log_target());
  std::vector<double> w(recs.size());
  double total = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) total += w[i] = std::exp(recs[i]->log_target() - mx);
  Posterior out;
  for (std::size_t i = 0; i < recs.size(); ++i) out.emplace_hint(out.end(), recs[i]->key.str(), w[i] / total);
  return out;
}

Posterior posterior_mc(const std::vector<std::string>& trace, std::size_t burn_in) {
  if (trace.size() <= burn_in) throw InvalidArgument("posterior_mc: trace shorter than burn-in");
  Posterior out;
  const double each = 1.0 / static_cast<double>(trace.size() - burn_in);
  for (std::size_t i = burn_in; i < trace.size(); ++i) out[trace[i]] += each;
  return out;
}

double total_variation(const Posterior& p, const Posterior& q) {
  double s = 0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    s += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) s += std::abs(v);
  return 0.5 * s;
}

}  // namespace blr
