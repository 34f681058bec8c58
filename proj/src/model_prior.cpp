#include "blr/model_prior.hpp"

#include "blr/error.hpp"

#include <algorithm>
#include <cmath>

namespace blr {

void Model::flip(std::size_t i) {
  if (i < logic.size()) {
    logic[i] = !logic[i];
  } else {
    fixed.at(i - logic.size()).flip();
  }
}

std::size_t Model::logic_count() const { return static_cast<std::size_t>(std::count(logic.begin(), logic.end(), true)); }
std::size_t Model::fixed_count() const { return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), true)); }

std::size_t hamming(const Model& a, const Model& b) {
  if (a.logic.size() != b.logic.size() || a.fixed.size() != b.fixed.size())
    throw InvalidArgument("hamming: models of different dimension");
  std::size_t h = 0;
  for (std::size_t i = 0; i < a.dimension(); ++i) h += a[i] != b[i];
  return h;
}

PriorConfig PriorConfig::for_p(std::size_t p, std::size_t k_max) {
  PriorConfig cfg;
  cfg.log_a = -2.0 * std::log(static_cast<double>(std::max<std::size_t>(p, 2)));
  cfg.k_max = k_max;
  return cfg;
}

void PriorConfig::validate() const {
  if (!(log_a < 0.0) || !std::isfinite(log_a)) throw InvalidArgument("prior: log_a must be finite and negative");
}

bool is_admissible(const Model& m, const PriorConfig& cfg) { return m.active_count() <= cfg.k_max; }

double log_model_prior(const Model& m, const Population& pop, const PriorConfig& cfg) {
  cfg.validate();
  if (m.logic.size() != pop.size())
    throw InvalidArgument("model has " + std::to_string(m.logic.size()) + " tree indicators, population has " +
                          std::to_string(pop.size()) + " trees");
  if (!is_admissible(m, cfg))
    throw InvalidArgument("model with " + std::to_string(m.active_count()) + " components exceeds k_max = " +
                          std::to_string(cfg.k_max));
  std::vector<int> c(pop.size());
  for (std::size_t j = 0; j < pop.size(); ++j) c[j] = complexity(pop.trees[j], cfg.measure);
  return log_model_prior(m, c, cfg.log_a);
}

double log_model_prior(const Model& m, const std::vector<int>& tree_complexity, double log_a) {
  long total = static_cast<long>(m.fixed_count());
  for (std::size_t j = 0; j < m.logic.size(); ++j)
    if (m.logic[j]) total += tree_complexity[j];
  return log_a * static_cast<double>(total);
}

}  // namespace blr
