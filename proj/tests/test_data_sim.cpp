#include "blr/data_sim.hpp"
#include "blr/numeric.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace blr;

namespace {

double column_corr(const BinaryMatrix& x, Eigen::Index a, Eigen::Index b) {
  return oracle::pearson(x.col(a).cast<double>(), x.col(b).cast<double>());
}

}  // namespace

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-10, 0.001, 0.02425, 0.3, 0.5, 0.9, 0.999999}) {
    CAPTURE(p);
    CHECK(numeric::normal_cdf(numeric::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(numeric::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  const auto rule = numeric::gauss_legendre(48);
  double s0 = 0, s4 = 0, s95 = 0;
  for (Eigen::Index i = 0; i < rule.rows(); ++i) {
    s0 += rule(i, 1);
    s4 += rule(i, 1) * std::pow(rule(i, 0), 4);
    s95 += rule(i, 1) * std::pow(rule(i, 0), 94);
  }
  CHECK(s0 == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(s4 == doctest::Approx(2.0 / 5).epsilon(1e-13));
  CHECK(s95 == doctest::Approx(2.0 / 95).epsilon(1e-10));
}

TEST_CASE("bivariate normal orthant probability matches the arcsine formula") {
  for (double rho : {-0.99, -0.5, 0.0, 0.3, 0.8, 0.999}) {
    const double expect = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
    CHECK(numeric::bivariate_normal_cdf(0, 0, rho) == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(numeric::bivariate_normal_cdf(0.4, -0.3, 0) ==
        doctest::Approx(numeric::normal_cdf(0.4) * numeric::normal_cdf(-0.3)).epsilon(1e-14));
  CHECK(numeric::bivariate_normal_cdf(0.4, -0.3, 1.0) == doctest::Approx(numeric::normal_cdf(-0.3)));
}

TEST_CASE("random correlation matrices are valid") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_correlation_matrix(i % 2 ? 8 : 2, 2.5, rng);
    CHECK(c.diagonal().isOnes(1e-12));
    CHECK(c.isApprox(c.transpose()));
    CHECK(min_eigenvalue(c) > 0);
    CHECK(c.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("p = 2 off-diagonal follows the transformed Beta(a, a) law") {
  // a = alphad + (p - 2)/2 = 2.5: mean 0, variance 1 / (2a + 1).
  Rng rng(2);
  const int n = 20000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double r = random_correlation_matrix(2, 2.5, rng)(0, 1);
    s += r;
    s2 += r * r;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0 / 6.0).epsilon(0.03));
}

TEST_CASE("latent correlation: arcsine identity at equal margins and bisection otherwise") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 1.0 / 3, 1.0 / 3, 1;
  const Eigen::MatrixXd l = latent_correlation(c, Eigen::Vector2d(0.5, 0.5));
  CHECK(l(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const Eigen::Vector2d m(0.3, 0.6);
  const Eigen::MatrixXd lg = latent_correlation(c, m);
  // Reconstruct the binary correlation from the orthant probability.
  const double h = numeric::normal_quantile(0.3), k = numeric::normal_quantile(0.6);
  const double p11 = numeric::bivariate_normal_cdf(h, k, lg(0, 1));
  const double rho = (p11 - 0.18) / std::sqrt(0.3 * 0.7 * 0.6 * 0.4);
  CHECK(rho == doctest::Approx(1.0 / 3).epsilon(1e-5));
}

TEST_CASE("correlated binary sampler") {
  Rng rng(3);
  const Eigen::Index n = 100000;
  Eigen::MatrixXd c(3, 3);
  c << 1, 1.0 / 3, 0, 1.0 / 3, 1, 0, 0, 0, 1;
  const BinaryMatrix x = sample_correlated_binary(n, c, Eigen::Vector3d(0.5, 0.5, 0.5), rng);
  CHECK(std::abs(column_corr(x, 0, 1) - 1.0 / 3) < 0.02);
  CHECK(std::abs(column_corr(x, 0, 2)) < 0.02);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double mean = x.col(j).cast<double>().mean();
    CHECK(std::abs(mean - 0.5) < 3 * std::sqrt(0.25 / n));
  }

  const BinaryMatrix y = sample_correlated_binary(n, c, Eigen::Vector3d(0.2, 0.7, 0.5), rng);
  CHECK(std::abs(y.col(0).cast<double>().mean() - 0.2) < 3 * std::sqrt(0.16 / n));
  CHECK(std::abs(y.col(1).cast<double>().mean() - 0.7) < 3 * std::sqrt(0.21 / n));
  CHECK(std::abs(column_corr(y, 0, 1) - 1.0 / 3) < 0.02);

  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(2, 2);
  const BinaryMatrix z = sample_correlated_binary(1000, one, Eigen::Vector2d(0.5, 0.5), rng);
  CHECK(z.col(0) == z.col(1));

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1.5, 1.5, 1;
  CHECK_THROWS_AS(sample_correlated_binary(10, bad, Eigen::Vector2d(0.5, 0.5), rng), InvalidArgument);
  CHECK_THROWS_AS(sample_correlated_binary(10, c, Eigen::Vector3d(0.5, 1.0, 0.5), rng), InvalidArgument);
}

TEST_CASE("Haldane map function") {
  CHECK(haldane_recombination(0) == 0.0);
  CHECK(1 - 2 * haldane_recombination(10) == doctest::Approx(std::exp(-0.2)).epsilon(1e-14));
  CHECK(haldane_recombination(1e6) == doctest::Approx(0.5));
}

TEST_CASE("genetic map layout") {
  const GeneticMap m = GeneticMap::default_map();
  CHECK(m.markers() == 50);
  CHECK(m.chromosomes.size() == 5);
  CHECK(m.chromosomes[0].back() - m.chromosomes[0].front() == doctest::Approx(100));
  CHECK(m.chromosomes[4].back() - m.chromosomes[4].front() == doctest::Approx(40));
  const auto [c, pos] = m.locate(12);
  CHECK(c == 1);
  CHECK(pos == doctest::Approx(m.chromosomes[1][2]));
  CHECK_THROWS_AS(m.locate(50), InvalidArgument);
}

TEST_CASE("back-cross correlation decays with map distance") {
  Rng rng(4);
  const GeneticMap map = GeneticMap::equidistant({100, 100}, 11);  // 10 cM spacing
  const Backcross bc = simulate_backcross(100000, map, rng, false);
  CHECK(std::abs(column_corr(bc.x, 0, 1) - std::exp(-0.2)) < 0.02);
  CHECK(std::abs(column_corr(bc.x, 3, 14)) < 0.02);
  // log correlation against distance: slope -2/100 per cM.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (int lag = 1; lag <= 6; ++lag) {
    const double xv = 10.0 * lag, yv = std::log(column_corr(bc.x, 0, lag));
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
    ++k;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(std::abs(slope + 0.02) < 0.002);

  const GeneticMap zero = GeneticMap::equidistant({0}, 3);
  const Backcross same = simulate_backcross(500, zero, rng, false);
  CHECK(same.x.col(0) == same.x.col(2));
}

TEST_CASE("back-cross permutation is returned") {
  Rng rng(5);
  const GeneticMap map = GeneticMap::default_map();
  const Backcross a = simulate_backcross(2000, map, rng, true);
  std::vector<Eigen::Index> sorted = a.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (Eigen::Index j = 0; j < 50; ++j) CHECK(sorted[j] == j);
  const Backcross p = simulate_backcross(2000, map, rng, true);
  // Adjacent markers in map order stay strongly correlated after permuting columns.
  std::vector<Eigen::Index> col_of(50);
  for (Eigen::Index j = 0; j < 50; ++j) col_of[p.permutation[j]] = j;
  CHECK(column_corr(p.x, col_of[0], col_of[1]) > 0.7);
}

TEST_CASE("scenario means") {
  const ScenarioDefinition s5 = scenario_definition(Scenario::Scenario5);
  BinaryMatrix x = BinaryMatrix::Zero(2, 50);
  for (int j : {36, 1, 8, 6, 11, 19, 3, 9, 16, 29}) x(1, j) = 1;
  const Eigen::VectorXd mu = scenario_mean(s5, x, Eigen::MatrixXd(2, 0));
  CHECK(mu(0) == 1.0);
  CHECK(mu(1) == 22.0);

  const ScenarioDefinition age = scenario_definition(Scenario::Scenario4Age);
  Eigen::MatrixXd z(1, 1);
  z << 34;
  CHECK(scenario_mean(age, BinaryMatrix::Zero(1, 50), z)(0) == 69.0);

  const ScenarioDefinition s4 = scenario_definition(Scenario::Scenario4);
  BinaryMatrix y = BinaryMatrix::Zero(1, 50);
  y(0, 4) = y(0, 8) = 1;
  CHECK(scenario_mean(s4, y, Eigen::MatrixXd(1, 0))(0) == doctest::Approx(2.43));
}

TEST_CASE("scenario response with zero noise equals the mean") {
  Rng rng(7);
  const BinaryMatrix x = oracle::random_binary(100, 50, rng);
  ResponseOptions opt;
  opt.noise_sd = 0;
  const Dataset d = scenario_response(x, Scenario::Scenario5, rng, opt);
  CHECK(d.y == scenario_mean(scenario_definition(Scenario::Scenario5), x, d.z));
  CHECK(d.truth.size() == 4);
  CHECK(to_string(d.truth[3]) == to_string(parse_expression("(X4&(X10&(X17&X30)))")));
  CHECK_THROWS_AS(scenario_response(oracle::random_binary(10, 20, rng), Scenario::Scenario5, rng), InvalidArgument);

  const Dataset a = scenario_response(x, Scenario::Scenario4Age, rng);
  REQUIRE(a.z_names == std::vector<std::string>{"age"});
  CHECK(std::abs(a.z.col(0).mean() - 34) < 3);
}

TEST_CASE("simulate writes the documented CSV layout") {
  Rng rng(8);
  SimulationConfig cfg;
  const Simulated s = simulate(cfg, rng);
  CHECK(s.data.rows() == 1000);
  CHECK(s.data.p() == 50);
  std::ostringstream out;
  write_csv(out, s.data);
  const std::string header = out.str().substr(0, out.str().find('\n'));
  CHECK(std::count(header.begin(), header.end(), ',') == 50);
  std::istringstream in(out.str());
  const Dataset back = read_csv(in, "Y");
  CHECK(back.x == s.data.x);
  CHECK(back.y == s.data.y);
}

TEST_CASE("CSV reader errors name the problem") {
  std::istringstream missing("X1,X2,Z\n0,1,2\n");
  CHECK_THROWS_WITH_AS(read_csv(missing, "Y"), "response column 'Y' not found", InvalidArgument);
  std::istringstream nonbinary("X1,Y\n2,1\n");
  CHECK_THROWS_AS(read_csv(nonbinary, "Y"), InvalidArgument);
  std::istringstream fixed("X1,age,Y\n1,30.5,2\n0,20,1\n");
  const Dataset d = read_csv(fixed, "Y", {"age"});
  CHECK(d.z(0, 0) == 30.5);
  CHECK(d.p() == 1);
}

TEST_CASE("correlation-concentration figures at p = 50") {
  Rng rng(9);
  long within2 = 0, within3 = 0, total = 0;
  for (int m = 0; m < 100; ++m) {
    const auto c = random_correlation_matrix(50, 2.5, rng);
    for (Eigen::Index i = 0; i < 50; ++i)
      for (Eigen::Index j = i + 1; j < 50; ++j) {
        within2 += std::abs(c(i, j)) <= 0.2;
        within3 += std::abs(c(i, j)) <= 0.3;
        ++total;
      }
  }
  CHECK(std::abs(double(within2) / total - 0.85) < 0.05);
  CHECK(std::abs(double(within3) / total - 0.97) < 0.02);
}
