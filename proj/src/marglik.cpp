#include "blr/marglik.hpp"

#include <cmath>

namespace blr {

namespace {

double population_variance(const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0;
  return (y.array() - y.mean()).square().mean();
}

Eigen::MatrixXd population_columns(const Population& pop, const Dataset& data) {
  const Eigen::Index n = data.rows();
  const auto d = static_cast<Eigen::Index>(pop.size());
  Eigen::MatrixXd cols(n, d + data.q_fixed());
  for (Eigen::Index j = 0; j < d; ++j) cols.col(j) = evaluate(pop.trees[j], data.x).cast<double>();
  if (data.q_fixed() > 0) cols.rightCols(data.q_fixed()) = data.z;
  return cols;
}

}  // namespace

Eigen::MatrixXd design_matrix(const Model& m, const Population& pop, const Dataset& data) {
  if (m.logic.size() != pop.size() || static_cast<Eigen::Index>(m.fixed.size()) != data.q_fixed())
    throw InvalidArgument("design_matrix: model dimensions do not match population and data");
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd design(n, 1 + static_cast<Eigen::Index>(m.active_count()));
  design.col(0).setOnes();
  Eigen::Index c = 1;
  for (std::size_t j = 0; j < m.logic.size(); ++j)
    if (m.logic[j]) design.col(c++) = evaluate(pop.trees[j], data.x).cast<double>();
  for (std::size_t j = 0; j < m.fixed.size(); ++j)
    if (m.fixed[j]) design.col(c++) = data.z.col(static_cast<Eigen::Index>(j));
  return design;
}

double bic_log_marglik(double rss, Eigen::Index n, Eigen::Index rank, double y_variance) {
  const double nd = static_cast<double>(n);
  const double floor = nd * 1e-12 * (y_variance > 0 ? y_variance : 1.0);
  const double r = std::max(rss, floor);
  return -0.5 * (nd * std::log(r / nd) + static_cast<double>(rank) * std::log(nd));
}

double log_marglik_jeffreys(const Model& m, const Population& pop, const Dataset& data) {
  const Eigen::MatrixXd design = design_matrix(m, pop, data);
  const auto fit = fit_gaussian(design, data.y);
  return bic_log_marglik(fit.rss, fit.n, fit.rank, population_variance(data.y));
}

GramSystem::GramSystem(const Eigen::MatrixXd& columns, const Eigen::VectorXd& y) : n_(y.size()) {
  if (columns.rows() != y.size()) throw InvalidArgument("GramSystem: columns and response differ in length");
  means_ = columns.colwise().mean().transpose();
  y_mean_ = y.mean();
  const Eigen::MatrixXd centered = columns.rowwise() - means_.transpose();
  const Eigen::VectorXd yc = y.array() - y_mean_;
  gram_ = centered.transpose() * centered;
  cross_ = centered.transpose() * yc;
  yy_ = yc.squaredNorm();
  y_variance_ = yy_ / static_cast<double>(n_);
}

FitResult<double> GramSystem::fit(const std::vector<Eigen::Index>& active) const {
  const auto k = static_cast<Eigen::Index>(active.size());
  if (n_ <= k + 1)
    throw InvalidArgument("fit: need more rows (" + std::to_string(n_) + ") than columns (" + std::to_string(k + 1) + ")");

  // In-order Cholesky of the active sub-Gram, skipping columns whose residual
  // squared norm falls below kRankTolerance times their own squared norm.
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(k, k);
  std::vector<Eigen::Index> kept;
  kept.reserve(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const Eigen::Index ca = active[a];
    const double norm2 = gram_(ca, ca);
    const auto r = static_cast<Eigen::Index>(kept.size());
    Eigen::VectorXd row(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      double s = gram_(ca, active[kept[i]]);
      for (Eigen::Index m = 0; m < i; ++m) s -= row(m) * lower(i, m);
      row(i) = s / lower(i, i);
    }
    const double resid = norm2 - row.squaredNorm();
    if (!(resid > kRankTolerance * norm2) || norm2 <= 0) continue;
    lower.row(r).head(r) = row.transpose();
    lower(r, r) = std::sqrt(resid);
    kept.push_back(a);
  }

  const auto r = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd rhs(r);
  for (Eigen::Index i = 0; i < r; ++i) rhs(i) = cross_(active[kept[i]]);
  const auto tri = lower.topLeftCorner(r, r).triangularView<Eigen::Lower>();
  const Eigen::VectorXd half = tri.solve(rhs);
  const Eigen::VectorXd beta = tri.transpose().solve(half);

  FitResult<double> out;
  out.n = n_;
  out.rank = r + 1;
  out.rss = std::max(0.0, yy_ - half.squaredNorm());
  out.coefficients = Eigen::VectorXd::Zero(k + 1);
  double intercept = y_mean_;
  for (Eigen::Index i = 0; i < r; ++i) {
    out.coefficients(kept[i] + 1) = beta(i);
    intercept -= beta(i) * means_(active[kept[i]]);
  }
  out.coefficients(0) = intercept;
  return out;
}

EstimatorFactory from_plain(PlainEstimator fn) {
  return [fn = std::move(fn)](const Population& pop, const Dataset& data) -> BoundEstimator {
    return [fn, pop, &data](const Model& m) { return ModelFit{fn(m, pop, data), {}}; };
  };
}

EstimatorFactory jeffreys_estimator() {
  return [](const Population& pop, const Dataset& data) -> BoundEstimator {
    auto system = std::make_shared<const GramSystem>(population_columns(pop, data), data.y);
    return [system](const Model& m) {
      std::vector<Eigen::Index> active;
      active.reserve(m.active_count());
      for (std::size_t j = 0; j < m.dimension(); ++j)
        if (m[j]) active.push_back(static_cast<Eigen::Index>(j));
      auto fit = system->fit(active);
      return ModelFit{bic_log_marglik(fit.rss, fit.n, fit.rank, system->y_variance()), std::move(fit.coefficients)};
    };
  };
}

}  // namespace blr
