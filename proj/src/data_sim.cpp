#include "blr/data_sim.hpp"

#include "blr/error.hpp"
#include "blr/numeric.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>

namespace blr {

namespace {

double symmetric_beta(double shape, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0);
  const double a = g(rng);
  const double b = g(rng);
  return a / (a + b);
}

void check_correlation_shape(const Eigen::MatrixXd& corr) {
  if (corr.rows() != corr.cols()) throw InvalidArgument("correlation matrix must be square");
  if (!corr.isApprox(corr.transpose(), 1e-12)) throw InvalidArgument("correlation matrix must be symmetric");
  if ((corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw InvalidArgument("correlation matrix must have a unit diagonal");
}

LogicTree conjunction(std::initializer_list<int> one_based) {
  std::vector<int> idx(one_based);
  LogicTree acc = LogicTree::leaf(idx.back() - 1);
  for (auto it = idx.rbegin() + 1; it != idx.rend(); ++it) acc = LogicTree::join(Op::And, LogicTree::leaf(*it - 1), acc);
  return acc;
}

}  // namespace

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

CorrelationMatrix random_correlation_matrix(Eigen::Index p, double alphad, Rng& rng) {
  if (p < 2) throw InvalidArgument("random_correlation_matrix: p must be at least 2");
  if (!(alphad > 0)) throw InvalidArgument("random_correlation_matrix: alphad must be positive");
  const double pd = static_cast<double>(p);
  CorrelationMatrix rr = CorrelationMatrix::Identity(p, p);
  {
    const double shape = alphad + (pd - 2.0) / 2.0;
    for (Eigen::Index i = 1; i < p; ++i) rr(i - 1, i) = rr(i, i - 1) = 2.0 * symmetric_beta(shape, rng) - 1.0;
  }
  for (Eigen::Index m = 2; m < p; ++m) {
    const double shape = alphad + (pd - 1.0 - static_cast<double>(m)) / 2.0;
    for (Eigen::Index j = 0; j + m < p; ++j) {
      const auto mid = Eigen::seqN(j + 1, m - 1);
      const Eigen::VectorXd r1 = rr(j, mid).transpose();
      const Eigen::VectorXd r3 = rr(j + m, mid).transpose();
      const Eigen::LDLT<Eigen::MatrixXd> r2(rr(mid, mid));
      const Eigen::VectorXd s1 = r2.solve(r1);
      const Eigen::VectorXd s3 = r2.solve(r3);
      const double partial = 2.0 * symmetric_beta(shape, rng) - 1.0;
      const double v = r1.dot(s3) + partial * std::sqrt(std::max(0.0, (1.0 - r1.dot(s1)) * (1.0 - r3.dot(s3))));
      rr(j, j + m) = rr(j + m, j) = v;
    }
  }
  return rr;
}

Eigen::MatrixXd latent_correlation(const CorrelationMatrix& corr, const Eigen::VectorXd& margprob) {
  check_correlation_shape(corr);
  const Eigen::Index p = corr.rows();
  if (margprob.size() != p) throw InvalidArgument("margprob length does not match the correlation matrix");
  if ((margprob.array() <= 0).any() || (margprob.array() >= 1).any())
    throw InvalidArgument("margprob entries must lie in (0, 1)");
  Eigen::VectorXd q(p);
  for (Eigen::Index j = 0; j < p; ++j) q(j) = numeric::normal_quantile(margprob(j));

  Eigen::MatrixXd latent = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double rho = corr(i, j);
      double lambda;
      if (margprob(i) == 0.5 && margprob(j) == 0.5) {
        lambda = std::sin(std::numbers::pi * rho / 2.0);
      } else {
        const double pi = margprob(i), pj = margprob(j);
        const double target = rho * std::sqrt(pi * (1 - pi) * pj * (1 - pj)) + pi * pj;
        double lo = -1.0, hi = 1.0;
        while (hi - lo > 1e-6) {
          const double mid = 0.5 * (lo + hi);
          (numeric::bivariate_normal_cdf(q(i), q(j), mid) < target ? lo : hi) = mid;
        }
        lambda = 0.5 * (lo + hi);
      }
      latent(i, j) = latent(j, i) = lambda;
    }
  }
  return latent;
}

BinaryMatrix sample_correlated_binary(Eigen::Index n, const CorrelationMatrix& corr, const Eigen::VectorXd& margprob,
                                      Rng& rng) {
  check_correlation_shape(corr);
  if (min_eigenvalue(corr) < -1e-10) throw InvalidArgument("correlation matrix is not positive semidefinite");
  Eigen::MatrixXd latent = latent_correlation(corr, margprob);
  const Eigen::Index p = latent.rows();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(latent);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-10) {
    std::clog << "warning: latent correlation matrix is not positive definite; clipping eigenvalues at 1e-6\n";
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(latent);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-6);
    latent = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd s = latent.diagonal().cwiseSqrt().cwiseInverse();
    latent = s.asDiagonal() * latent * s.asDiagonal();
    ldlt.compute(latent);
  }
  // latent = P^T L D L^T P, so P^T L sqrt(D) maps iid normals to the latent law.
  Eigen::MatrixXd factor = ldlt.matrixL();
  factor = factor * ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  factor = ldlt.transpositionsP().transpose() * factor;

  Eigen::VectorXd threshold(p);
  for (Eigen::Index j = 0; j < p; ++j) threshold(j) = numeric::normal_quantile(margprob(j));

  std::normal_distribution<double> normal;
  Eigen::MatrixXd eps(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) eps(i, j) = normal(rng);
  const Eigen::MatrixXd z = eps * factor.transpose();
  BinaryMatrix x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) x.col(j) = (z.col(j).array() < threshold(j)).cast<std::uint8_t>();
  return x;
}

GeneticMap GeneticMap::default_map() { return equidistant({100, 85, 70, 55, 40}, 10); }

GeneticMap GeneticMap::equidistant(const std::vector<double>& lengths, int markers_per_chromosome) {
  if (markers_per_chromosome < 1) throw InvalidArgument("need at least one marker per chromosome");
  GeneticMap map;
  for (double len : lengths) {
    std::vector<double> pos(static_cast<std::size_t>(markers_per_chromosome));
    for (int k = 0; k < markers_per_chromosome; ++k)
      pos[k] = markers_per_chromosome == 1 ? 0.0 : len * k / (markers_per_chromosome - 1);
    map.chromosomes.push_back(std::move(pos));
  }
  return map;
}

Eigen::Index GeneticMap::markers() const {
  Eigen::Index m = 0;
  for (const auto& c : chromosomes) m += static_cast<Eigen::Index>(c.size());
  return m;
}

std::pair<int, double> GeneticMap::locate(Eigen::Index marker) const {
  Eigen::Index left = marker;
  for (std::size_t c = 0; c < chromosomes.size(); ++c) {
    const auto sz = static_cast<Eigen::Index>(chromosomes[c].size());
    if (left < sz) return {static_cast<int>(c), chromosomes[c][left]};
    left -= sz;
  }
  throw InvalidArgument("marker " + std::to_string(marker) + " not on the map");
}

void GeneticMap::validate() const {
  if (chromosomes.empty()) throw InvalidArgument("genetic map has no chromosomes");
  for (const auto& c : chromosomes) {
    if (c.empty()) throw InvalidArgument("genetic map has an empty chromosome");
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] < 0) throw InvalidArgument("negative marker position");
      if (k > 0 && c[k] < c[k - 1]) throw InvalidArgument("marker positions must be non-decreasing");
    }
  }
}

double haldane_recombination(double distance_cm) { return 0.5 * (1.0 - std::exp(-2.0 * distance_cm / 100.0)); }

Backcross simulate_backcross(Eigen::Index n, const GeneticMap& map, Rng& rng, bool permute) {
  map.validate();
  const Eigen::Index p = map.markers();
  BinaryMatrix geno(n, p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (const auto& chrom : map.chromosomes) {
      std::uint8_t g = u(rng) < 0.5;
      geno(i, col++) = g;
      for (std::size_t k = 1; k < chrom.size(); ++k) {
        if (u(rng) < haldane_recombination(chrom[k] - chrom[k - 1])) g = 1 - g;
        geno(i, col++) = g;
      }
    }
  }
  Backcross out;
  out.permutation.resize(static_cast<std::size_t>(p));
  std::iota(out.permutation.begin(), out.permutation.end(), Eigen::Index{0});
  if (permute) {
    std::shuffle(out.permutation.begin(), out.permutation.end(), rng);
    out.x = geno(Eigen::all, out.permutation);
  } else {
    out.x = std::move(geno);
  }
  return out;
}

Scenario parse_scenario(const std::string& name) {
  if (name == "scenario5") return Scenario::Scenario5;
  if (name == "scenario4") return Scenario::Scenario4;
  if (name == "scenario4_age") return Scenario::Scenario4Age;
  throw InvalidArgument("unknown scenario '" + name + "' (expected scenario5, scenario4 or scenario4_age)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Scenario5: return "scenario5";
    case Scenario::Scenario4: return "scenario4";
    case Scenario::Scenario4Age: return "scenario4_age";
  }
  return "?";
}

Eigen::Index ScenarioDefinition::required_columns() const {
  int mx = -1;
  for (const auto& t : trees) mx = std::max(mx, t.max_index());
  return mx + 1;
}

ScenarioDefinition scenario_definition(Scenario s) {
  ScenarioDefinition def;
  switch (s) {
    case Scenario::Scenario5:
      def.trees = {conjunction({37}), conjunction({2, 9}), conjunction({7, 12, 20}), conjunction({4, 10, 17, 30})};
      def.effects = {1.5, 3.5, 9.0, 7.0};
      break;
    case Scenario::Scenario4Age:
      def.age_effect = 2.0;
      [[fallthrough]];
    case Scenario::Scenario4:
      def.trees = {conjunction({5, 9}), conjunction({8, 11}), conjunction({1, 4})};
      def.effects = {1.43, 0.89, 0.7};
      break;
  }
  return def;
}

Eigen::VectorXd scenario_mean(const ScenarioDefinition& def, const BinaryMatrix& x, const Eigen::MatrixXd& z) {
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(x.rows(), def.intercept);
  for (std::size_t k = 0; k < def.trees.size(); ++k) mu += def.effects[k] * evaluate(def.trees[k], x).cast<double>();
  if (def.age_effect) {
    if (z.cols() < 1) throw InvalidArgument("scenario needs the age covariate");
    mu += *def.age_effect * z.col(0);
  }
  return mu;
}

Dataset scenario_response(const BinaryMatrix& x, Scenario scenario, Rng& rng, const ResponseOptions& options) {
  const ScenarioDefinition def = scenario_definition(scenario);
  if (x.cols() < def.required_columns())
    throw InvalidArgument(scenario_name(scenario) + " needs at least " + std::to_string(def.required_columns()) +
                          " covariates, got " + std::to_string(x.cols()));
  Dataset data;
  data.x = x;
  data.x_names = default_x_names(x.cols());
  data.z.resize(x.rows(), 0);
  if (def.age_effect) {
    std::poisson_distribution<int> pois(def.age_lambda);
    data.z.resize(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) data.z(i, 0) = pois(rng);
    data.z_names = {"age"};
  }
  data.y = scenario_mean(def, x, data.z);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) data.y(i) += options.noise_sd * noise(rng);
  data.truth = def.trees;
  return data;
}

Generator parse_generator(const std::string& name) {
  if (name == "general") return Generator::General;
  if (name == "qtl") return Generator::Qtl;
  throw InvalidArgument("unknown generator '" + name + "' (expected general or qtl)");
}

Simulated simulate(const SimulationConfig& cfg, Rng& rng) {
  Simulated out;
  BinaryMatrix x;
  if (cfg.generator == Generator::General) {
    const CorrelationMatrix corr = random_correlation_matrix(cfg.p, cfg.alphad, rng);
    x = sample_correlated_binary(cfg.n, corr, Eigen::VectorXd::Constant(cfg.p, cfg.margprob), rng);
  } else {
    Backcross bc = simulate_backcross(cfg.n, cfg.map, rng, cfg.permute);
    x = std::move(bc.x);
    out.permutation = std::move(bc.permutation);
  }
  out.data = scenario_response(x, cfg.scenario, rng);
  return out;
}

}  // namespace blr
