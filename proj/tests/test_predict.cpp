#include "blr/predict.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace blr;

namespace {

ModelRecord record(std::vector<std::string> trees, double log_marglik, Eigen::VectorXd beta) {
  ModelRecord r;
  r.key.trees = std::move(trees);
  r.log_marglik = log_marglik;
  r.coefficients = std::move(beta);
  return r;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::MatrixXd with_intercept(const Dataset& d) {
  Eigen::MatrixXd m(d.rows(), 1 + d.p());
  m.col(0).setOnes();
  m.rightCols(d.p()) = d.x.cast<double>();
  return m;
}

}  // namespace

TEST_CASE("RMSE and MAE on hand-computed vectors") {
  PredictionScore s = score_predictions(vec({1, -1}), vec({0, 0}));
  CHECK(s.rmse == 1.0);
  CHECK(s.mae == 1.0);
  s = score_predictions(vec({3, 0, 0, 0}), vec({0, 0, 0, 0}));
  CHECK(s.rmse == 1.5);
  CHECK(s.mae == 0.75);
  CHECK_THROWS_AS(score_predictions(vec({1}), vec({1, 2})), InvalidArgument);
  CHECK_THROWS_AS(score_predictions(Eigen::VectorXd(), Eigen::VectorXd()), InvalidArgument);
}

TEST_CASE("property: RMSE is at least MAE") {
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a(1 + trial % 17), b(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = g(rng);
      b(i) = g(rng);
    }
    const PredictionScore s = score_predictions(a, b);
    CHECK(s.rmse >= s.mae - 1e-15);
  }
}

TEST_CASE("ridge extremes: huge penalty gives the mean, zero penalty gives least squares") {
  Rng rng(2);
  const Dataset train = oracle::linear_data(200, 5, {1.0, -0.5, 0, 2.0}, rng);
  const Dataset test = oracle::linear_data(30, 5, {}, rng);
  const PredictionResult heavy = ridge_baseline(train, test, {1e14});
  for (Eigen::Index i = 0; i < heavy.values.size(); ++i)
    CHECK(heavy.values(i) == doctest::Approx(train.y.mean()).epsilon(1e-8));

  const PredictionResult ols = ridge_baseline(train, test, {0.0});
  const Eigen::VectorXd beta = oracle::normal_equations(with_intercept(train), train.y);
  const Eigen::VectorXd expect = with_intercept(test) * beta;
  CHECK((ols.values - expect).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(*ols.lambda == 0.0);
}

TEST_CASE("property: larger ridge penalties pull predictions toward the mean") {
  Rng rng(3);
  const Dataset train = oracle::linear_data(120, 8, {1, 1, -1, 0.5}, rng);
  const Dataset test = oracle::linear_data(40, 8, {}, rng);
  const auto grid = ridge_grid(train.y, 12);
  double last = INFINITY;
  for (double lambda : grid) {
    const PredictionResult r = ridge_baseline(train, test, {lambda});
    const double spread = (r.values.array() - train.y.mean()).matrix().norm();
    CHECK(spread <= last + 1e-12);
    last = spread;
  }
}

TEST_CASE("ridge grid is log-spaced over the response variance") {
  const Eigen::VectorXd y = vec({0, 2});  // population variance 1
  const auto g = ridge_grid(y, 9);
  CHECK(g.front() == doctest::Approx(1e-4));
  CHECK(g.back() == doctest::Approx(1e4));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(10.0));
}

TEST_CASE("ridge ignores constant columns") {
  Rng rng(4);
  Dataset train = oracle::linear_data(100, 3, {1}, rng);
  Dataset test = oracle::linear_data(10, 3, {}, rng);
  train.x.col(2).setZero();
  CHECK_NOTHROW(ridge_baseline(train, test, ridge_grid(train.y)));
}

TEST_CASE("model averaging with one model returns that model's prediction") {
  Rng rng(5);
  const Dataset test = oracle::linear_data(20, 3, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"(X1&X2)"}, -10, vec({1.0, 2.0})));
  const PredictionResult p = predict_bma(reg, test);
  for (Eigen::Index i = 0; i < test.rows(); ++i)
    CHECK(p.values(i) == doctest::Approx(1.0 + 2.0 * (test.x(i, 0) & test.x(i, 1))));
}

TEST_CASE("model averaging with two equally weighted models averages them") {
  Rng rng(6);
  const Dataset test = oracle::linear_data(20, 3, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"X1"}, -4, vec({0.0, 2.0})));
  reg.insert(record({"X3"}, -4, vec({1.0, -1.0})));
  const PredictionResult p = predict_bma(reg, test);
  for (Eigen::Index i = 0; i < test.rows(); ++i)
    CHECK(p.values(i) == doctest::Approx(0.5 * (2.0 * test.x(i, 0)) + 0.5 * (1.0 - test.x(i, 2))));
}

TEST_CASE("property: averaged predictions lie within the range of the models") {
  Rng rng(7);
  std::normal_distribution<double> g;
  const Dataset test = oracle::linear_data(25, 4, {}, rng);
  for (int trial = 0; trial < 50; ++trial) {
    VisitedRegistry reg;
    std::vector<Eigen::VectorXd> singles;
    for (int m = 0; m < 4; ++m) {
      ModelRecord r = record({"X" + std::to_string(m + 1)}, g(rng) * 3, vec({g(rng), g(rng)}));
      VisitedRegistry solo;
      solo.insert(r);
      singles.push_back(predict_bma(solo, test).values);
      reg.insert(r);
    }
    const Eigen::VectorXd avg = predict_bma(reg, test).values;
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& s : singles) {
        lo = std::min(lo, s(i));
        hi = std::max(hi, s(i));
      }
      CHECK(avg(i) >= lo - 1e-12);
      CHECK(avg(i) <= hi + 1e-12);
    }
  }
}

TEST_CASE("num_best restricts averaging to the top models") {
  Rng rng(8);
  const Dataset test = oracle::linear_data(5, 2, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"X1"}, 0, vec({7.0, 0.0})));
  reg.insert(record({"X2"}, -1, vec({-3.0, 0.0})));
  const PredictionResult p = predict_bma(reg, test, 1);
  for (Eigen::Index i = 0; i < test.rows(); ++i) CHECK(p.values(i) == 7.0);
}

TEST_CASE("records without coefficients cannot be averaged") {
  Rng rng(9);
  const Dataset test = oracle::linear_data(5, 2, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"X1"}, 0, Eigen::VectorXd()));
  CHECK_THROWS_WITH_AS(predict_bma(reg, test), doctest::Contains("carries no coefficients"), InvalidArgument);
}

TEST_CASE("median-probability model keeps expressions with inclusion at least one half") {
  Rng rng(10);
  const Dataset train = oracle::linear_data(150, 3, {1.5, 0.2}, rng);
  const Dataset test = oracle::linear_data(20, 3, {}, rng);
  VisitedRegistry reg;
  // X1 appears with mass 0.5 + 0.4, X2 with 0.4.
  reg.insert(record({"X1"}, std::log(0.5), vec({0, 0})));
  reg.insert(record({"X1", "X2"}, std::log(0.4), vec({0, 0, 0})));
  reg.insert(record({}, std::log(0.1), vec({0})));
  const PredictionResult p = predict_single(reg, train, test, SelectionRule::MedianProbability);
  CHECK_FALSE(p.intercept_only);
  Eigen::MatrixXd xtr(train.rows(), 2), xte(test.rows(), 2);
  xtr.col(0).setOnes();
  xtr.col(1) = train.x.col(0).cast<double>();
  xte.col(0).setOnes();
  xte.col(1) = test.x.col(0).cast<double>();
  const Eigen::VectorXd expect = xte * oracle::normal_equations(xtr, train.y);
  CHECK((p.values - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("an empty median-probability model falls back to the intercept") {
  Rng rng(11);
  const Dataset train = oracle::linear_data(50, 2, {}, rng);
  const Dataset test = oracle::linear_data(5, 2, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"X1"}, std::log(0.3), vec({0, 0})));
  reg.insert(record({}, std::log(0.7), vec({0})));
  const PredictionResult p = predict_single(reg, train, test, SelectionRule::MedianProbability);
  CHECK(p.intercept_only);
  for (Eigen::Index i = 0; i < test.rows(); ++i) CHECK(p.values(i) == doctest::Approx(train.y.mean()));
}

TEST_CASE("MAP prediction uses the best record") {
  Rng rng(12);
  const Dataset test = oracle::linear_data(5, 2, {}, rng);
  VisitedRegistry reg;
  reg.insert(record({"X2"}, 1, vec({1.0, 1.0})));
  reg.insert(record({"X1"}, 0, vec({9.0, 9.0})));
  const PredictionResult p = predict_single(reg, test, test, SelectionRule::Map);
  for (Eigen::Index i = 0; i < test.rows(); ++i) CHECK(p.values(i) == 1.0 + test.x(i, 1));
}

TEST_CASE("oracle prediction is the scenario mean") {
  Rng rng(13);
  const BinaryMatrix x = oracle::random_binary(30, 50, rng);
  const Dataset d = scenario_response(x, Scenario::Scenario4, rng);
  const PredictionResult p = oracle_prediction(scenario_definition(Scenario::Scenario4), d);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double mu = 1 + 1.43 * (x(i, 4) & x(i, 8)) + 0.89 * (x(i, 7) & x(i, 10)) + 0.7 * (x(i, 0) & x(i, 3));
    CHECK(p.values(i) == doctest::Approx(mu));
  }
}

TEST_CASE("prediction file format") {
  PredictionResult p;
  p.values = vec({0.1, 2.0});
  std::ostringstream out;
  write_predictions(out, p);
  CHECK(out.str() == "prediction\n0.10000000000000001\n2\n");
}
