#include "blr/predict.hpp"

#include "blr/marglik.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>

namespace blr {

std::string method_name(PredictionMethod m) {
  switch (m) {
    case PredictionMethod::Bma: return "BMA";
    case PredictionMethod::MedianProbability: return "median-probability";
    case PredictionMethod::Map: return "MAP";
    case PredictionMethod::Ridge: return "ridge";
    case PredictionMethod::Oracle: return "oracle";
  }
  return "?";
}

Eigen::MatrixXd key_design(const ModelKey& key, const Dataset& test) {
  Eigen::MatrixXd design(test.x.rows(), 1 + static_cast<Eigen::Index>(key.size()));
  design.col(0).setOnes();
  Eigen::Index c = 1;
  for (const auto& expr : key.trees) design.col(c++) = evaluate(parse_expression(expr), test.x).cast<double>();
  for (const auto& name : key.fixed) {
    auto it = std::find(test.z_names.begin(), test.z_names.end(), name);
    if (it == test.z_names.end()) throw InvalidArgument("test data lacks covariate '" + name + "'");
    design.col(c++) = test.z.col(it - test.z_names.begin());
  }
  return design;
}

namespace {

Eigen::VectorXd record_prediction(const ModelRecord& rec, const Dataset& test) {
  if (rec.coefficients.size() != 1 + static_cast<Eigen::Index>(rec.key.size()))
    throw InvalidArgument("registry record '" + rec.key.str() +
                          "' carries no coefficients; use an estimator that retains fitted coefficients");
  return key_design(rec.key, test) * rec.coefficients;
}

}  // namespace

PredictionResult predict_bma(const VisitedRegistry& registry, const Dataset& test, std::size_t num_best) {
  if (registry.empty()) throw InvalidArgument("predict_bma: empty registry");
  if (num_best < 1) throw InvalidArgument("predict_bma: num_best must be positive");
  std::vector<const ModelRecord*> recs = registry.records();
  std::stable_sort(recs.begin(), recs.end(),
                   [](const ModelRecord* a, const ModelRecord* b) { return a->log_target() > b->log_target(); });
  if (recs.size() > num_best) recs.resize(num_best);
  std::vector<double> lt;
  for (const auto* r : recs) lt.push_back(r->log_target());
  const double total = log_sum_exp(lt);

  PredictionResult out;
  out.method = PredictionMethod::Bma;
  out.values = Eigen::VectorXd::Zero(test.x.rows());
  for (std::size_t i = 0; i < recs.size(); ++i) out.values += std::exp(lt[i] - total) * record_prediction(*recs[i], test);
  return out;
}

PredictionResult predict_single(const VisitedRegistry& registry, const Dataset& train, const Dataset& test,
                                SelectionRule rule) {
  if (registry.empty()) throw InvalidArgument("predict_single: empty registry");
  PredictionResult out;
  if (rule == SelectionRule::Map) {
    out.method = PredictionMethod::Map;
    const ModelRecord& best = registry.best();
    out.values = record_prediction(best, test);
    out.intercept_only = best.key.size() == 0;
    return out;
  }
  out.method = PredictionMethod::MedianProbability;
  ModelKey key;
  for (const auto& [name, rho] : inclusion_map(registry)) {
    if (rho < 0.5) continue;
    if (std::find(train.z_names.begin(), train.z_names.end(), name) != train.z_names.end())
      key.fixed.push_back(name);
    else
      key.trees.push_back(name);
  }
  if (key.size() == 0) {
    out.intercept_only = true;
    std::clog << "warning: median-probability model is empty; predicting the training mean\n";
  }
  const auto fit = fit_gaussian(key_design(key, train), train.y);
  out.values = key_design(key, test) * fit.coefficients;
  return out;
}

VisitedRegistry merge_registries(const std::vector<ChainResult>& chains) {
  std::size_t cap = 0;
  for (const auto& c : chains) cap += c.registry.size();
  VisitedRegistry merged(std::max<std::size_t>(cap, 1));
  for (const auto& c : chains)
    for (const auto* rec : c.registry.records())
      if (!merged.find(rec->key.str())) merged.insert(*rec);
  return merged;
}

PredictionScore score_predictions(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
  if (predicted.size() != actual.size())
    throw InvalidArgument("score_predictions: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(actual.size()) + " observations");
  if (actual.size() == 0) throw InvalidArgument("score_predictions: no observations");
  const Eigen::ArrayXd diff = (predicted - actual).array();
  const double n = static_cast<double>(actual.size());
  return {std::sqrt(diff.square().sum() / n), diff.abs().sum() / n};
}

std::vector<double> ridge_grid(const Eigen::VectorXd& y, std::size_t points) {
  if (points < 1) throw InvalidArgument("ridge_grid: need at least one point");
  double var = y.size() ? (y.array() - y.mean()).square().mean() : 1.0;
  if (!(var > 0)) var = 1.0;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = var * std::pow(10.0, -4.0 + 8.0 * t);
  }
  return grid;
}

namespace {

Eigen::MatrixXd covariates(const Dataset& d) {
  Eigen::MatrixXd m(d.rows(), d.p() + d.q_fixed());
  m.leftCols(d.p()) = d.x.cast<double>();
  m.rightCols(d.q_fixed()) = d.z;
  return m;
}

}  // namespace

PredictionResult ridge_baseline(const Dataset& train, const Dataset& test, const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw InvalidArgument("ridge_baseline: empty lambda grid");
  if (train.p() != test.p() || train.q_fixed() != test.q_fixed())
    throw InvalidArgument("ridge_baseline: train and test covariates differ");
  const Eigen::MatrixXd xtr = covariates(train);
  const Eigen::MatrixXd xte = covariates(test);
  const double n = static_cast<double>(xtr.rows());
  const Eigen::RowVectorXd mean = xtr.colwise().mean();
  Eigen::RowVectorXd sd = ((xtr.rowwise() - mean).array().square().colwise().sum() / n).sqrt();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (sd(j) > 0) keep.push_back(j);
  Eigen::MatrixXd s(xtr.rows(), static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd st(xte.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index j = keep[k];
    s.col(static_cast<Eigen::Index>(k)) = (xtr.col(j).array() - mean(j)) / sd(j);
    st.col(static_cast<Eigen::Index>(k)) = (xte.col(j).array() - mean(j)) / sd(j);
  }
  const double ybar = train.y.mean();
  const Eigen::VectorXd yc = train.y.array() - ybar;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd d = svd.singularValues();
  const Eigen::VectorXd uty = svd.matrixU().transpose() * yc;

  double best_aic = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid.front();
  Eigen::VectorXd best_beta = Eigen::VectorXd::Zero(s.cols());
  for (double lambda : lambda_grid) {
    if (!(lambda >= 0)) throw InvalidArgument("ridge_baseline: lambda must be non-negative");
    Eigen::VectorXd shrink(d.size()), fitted_w(d.size());
    double df = 1;  // intercept
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double d2 = d(i) * d(i);
      const double denom = d2 + lambda;
      shrink(i) = denom > 0 ? d(i) / denom : 0.0;
      fitted_w(i) = denom > 0 ? d2 / denom : 0.0;
      df += fitted_w(i);
    }
    const Eigen::VectorXd fitted = svd.matrixU() * fitted_w.cwiseProduct(uty);
    const double rss = std::max((yc - fitted).squaredNorm(), std::numeric_limits<double>::min());
    const double aic = n * std::log(rss / n) + 2 * df;
    if (aic < best_aic) {
      best_aic = aic;
      best_lambda = lambda;
      best_beta = svd.matrixV() * shrink.cwiseProduct(uty);
    }
  }
  PredictionResult out;
  out.method = PredictionMethod::Ridge;
  out.lambda = best_lambda;
  out.values = (st * best_beta).array() + ybar;
  return out;
}

PredictionResult oracle_prediction(const ScenarioDefinition& def, const Dataset& test) {
  PredictionResult out;
  out.method = PredictionMethod::Oracle;
  out.values = scenario_mean(def, test.x, test.z);
  return out;
}

void write_predictions(std::ostream& out, const PredictionResult& pred) {
  out << "prediction\n";
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < pred.values.size(); ++i) out << pred.values(i) << '\n';
  out.precision(old);
}

}  // namespace blr
