#pragma once

#include "blr/data_sim.hpp"
#include "blr/gmjmcmc.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace blr {

enum class PredictionMethod { Bma, MedianProbability, Map, Ridge, Oracle };

std::string method_name(PredictionMethod m);

struct PredictionResult {
  Eigen::VectorXd values;
  PredictionMethod method = PredictionMethod::Bma;
  /// Set when the selected model was empty and the intercept alone was used.
  bool intercept_only = false;
  /// Ridge only: the selected penalty.
  std::optional<double> lambda;
};

/// Test-set design of a registry key: intercept, key.trees, key.fixed (looked up by name).
Eigen::MatrixXd key_design(const ModelKey& key, const Dataset& test);

/// Model-averaged prediction over the top `num_best` records by target, with
/// probabilities renormalized over that subset.
PredictionResult predict_bma(const VisitedRegistry& registry, const Dataset& test, std::size_t num_best = 100);

enum class SelectionRule { MedianProbability, Map };

/// Median-probability model (expressions with inclusion >= 0.5, refit on
/// `train`) or the registry argmax.
PredictionResult predict_single(const VisitedRegistry& registry, const Dataset& train, const Dataset& test,
                                SelectionRule rule);

/// Union of several chains' registries, capacity grown to hold them all.
VisitedRegistry merge_registries(const std::vector<ChainResult>& chains);

struct PredictionScore {
  double rmse = 0;
  double mae = 0;
};

PredictionScore score_predictions(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);

/// `points` values log-spaced over [1e-4, 1e4] * var(y).
std::vector<double> ridge_grid(const Eigen::VectorXd& y, std::size_t points = 100);

/// Ridge on standardized covariates (X and Z) with an unpenalized intercept;
/// lambda chosen by AIC = n log(RSS/n) + 2 df, df the trace of the hat matrix.
PredictionResult ridge_baseline(const Dataset& train, const Dataset& test, const std::vector<double>& lambda_grid);

/// Prediction by the true generating mean.
PredictionResult oracle_prediction(const ScenarioDefinition& def, const Dataset& test);

/// Single column with header "prediction".
void write_predictions(std::ostream& out, const PredictionResult& pred);

}  // namespace blr
