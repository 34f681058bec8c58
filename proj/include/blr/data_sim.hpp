#pragma once

#include "blr/dataset.hpp"
#include "blr/mjmcmc.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace blr {

/// p x p symmetric matrix with unit diagonal.
using CorrelationMatrix = Eigen::MatrixXd;

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// D-vine construction: partial correlations at lag m drawn from
/// Beta(alphad + (p-1-m)/2, same) on (-1, 1), so every correlation is
/// marginally Beta(alphad + (p-2)/2, same) on (-1, 1). Output is positive definite.
CorrelationMatrix random_correlation_matrix(Eigen::Index p, double alphad, Rng& rng);

/// Latent normal correlation reproducing the target binary correlations when
/// thresholding at the margprob quantiles. Equal 0.5 margins use
/// sin(pi rho / 2); other pairs solve the bivariate-normal orthant equation by
/// bisection.
Eigen::MatrixXd latent_correlation(const CorrelationMatrix& corr, const Eigen::VectorXd& margprob);

/// Binary matrix with the given margins and pairwise correlations, by
/// thresholding correlated normals. `corr` must be positive semidefinite; a
/// latent matrix that is not gets its eigenvalues clipped at 1e-6.
BinaryMatrix sample_correlated_binary(Eigen::Index n, const CorrelationMatrix& corr, const Eigen::VectorXd& margprob,
                                      Rng& rng);

/// Marker positions in centiMorgan, one vector per chromosome.
struct GeneticMap {
  std::vector<std::vector<double>> chromosomes;

  /// Five chromosomes of 100/85/70/55/40 cM with ten equidistant markers each.
  static GeneticMap default_map();
  /// Equidistant markers on chromosomes of the given lengths.
  static GeneticMap equidistant(const std::vector<double>& lengths, int markers_per_chromosome);

  Eigen::Index markers() const;
  /// Chromosome and position of a marker in chromosome-major order.
  std::pair<int, double> locate(Eigen::Index marker) const;
  void validate() const;
};

/// Haldane map function r = (1 - exp(-2 d / 100)) / 2.
double haldane_recombination(double distance_cm);

struct Backcross {
  BinaryMatrix x;
  /// Column j of x holds map marker permutation[j]; identity when not permuted.
  std::vector<Eigen::Index> permutation;
};

/// Back-cross genotypes: Markov chain along each chromosome with Haldane
/// recombination, chromosomes independent. Optionally permutes columns.
Backcross simulate_backcross(Eigen::Index n, const GeneticMap& map, Rng& rng, bool permute);

enum class Scenario { Scenario5, Scenario4, Scenario4Age };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

struct ScenarioDefinition {
  double intercept = 1;
  std::vector<LogicTree> trees;
  std::vector<double> effects;
  /// Coefficient of the Poisson "age" covariate, when present.
  std::optional<double> age_effect;
  double age_lambda = 34;
  Eigen::Index required_columns() const;
};

ScenarioDefinition scenario_definition(Scenario s);

/// Mean of the generating model for the rows of X (and age, if used).
Eigen::VectorXd scenario_mean(const ScenarioDefinition& def, const BinaryMatrix& x, const Eigen::MatrixXd& z);

struct ResponseOptions {
  double noise_sd = 1.0;
};

/// Builds Y ~ N(mu, noise_sd^2) for the named scenario and returns the data
/// set with the generating trees attached.
Dataset scenario_response(const BinaryMatrix& x, Scenario scenario, Rng& rng, const ResponseOptions& options = {});

enum class Generator { General, Qtl };

Generator parse_generator(const std::string& name);

struct SimulationConfig {
  Scenario scenario = Scenario::Scenario5;
  Generator generator = Generator::General;
  Eigen::Index n = 1000;
  Eigen::Index p = 50;
  double alphad = 2.5;
  double margprob = 0.5;
  GeneticMap map = GeneticMap::default_map();
  bool permute = true;
};

struct Simulated {
  Dataset data;
  std::vector<Eigen::Index> permutation;
};

Simulated simulate(const SimulationConfig& cfg, Rng& rng);

}  // namespace blr
