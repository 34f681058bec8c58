#pragma once

#include "blr/dataset.hpp"
#include "blr/error.hpp"
#include "blr/model_prior.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>

namespace blr {

/// Relative tolerance used to decide that a design column is linearly dependent.
inline constexpr double kRankTolerance = 1e-10;

template <typename Scalar>
struct FitResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  Scalar rss = 0;
  Eigen::Index n = 0;
  Eigen::Index rank = 0;
};

/// Least squares via column-pivoted Householder QR. Columns found dependent at
/// kRankTolerance get a zero coefficient and do not count towards the rank.
template <typename DerivedX, typename DerivedY>
FitResult<typename DerivedX::Scalar> fit_gaussian(const Eigen::MatrixBase<DerivedX>& design,
                                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (design.rows() != y.rows()) throw InvalidArgument("fit_gaussian: design and response differ in length");
  if (design.rows() <= design.cols())
    throw InvalidArgument("fit_gaussian: need more rows (" + std::to_string(design.rows()) + ") than columns (" +
                          std::to_string(design.cols()) + ")");
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(Scalar(kRankTolerance));
  // qr.solve() truncates at Eigen's own pivot cut-off, not the threshold above.
  const Eigen::Index rank = qr.rank();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> qty = y;
  qty.applyOnTheLeft(qr.householderQ().setLength(qr.nonzeroPivots()).adjoint());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> reduced = qty.head(rank);
  qr.matrixQR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>().solveInPlace(reduced);
  FitResult<Scalar> out;
  out.coefficients = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(design.cols());
  for (Eigen::Index i = 0; i < rank; ++i) out.coefficients(qr.colsPermutation().indices()(i)) = reduced(i);
  out.rss = (y - design * out.coefficients).squaredNorm();
  out.n = design.rows();
  out.rank = rank;
  return out;
}

/// Intercept column, then evaluated active trees, then active fixed covariates.
Eigen::MatrixXd design_matrix(const Model& m, const Population& pop, const Dataset& data);

/// -BIC/2 with BIC = n log(RSS/n) + rank log n. RSS is floored at n*1e-12*var(y)
/// so that exact fits stay finite.
double bic_log_marglik(double rss, Eigen::Index n, Eigen::Index rank, double y_variance);

/// Jeffreys/BIC log marginal likelihood computed from scratch (QR route).
double log_marglik_jeffreys(const Model& m, const Population& pop, const Dataset& data);

/// What an estimator reports for one model. Coefficients follow the design
/// order (intercept, active trees in population order, active fixed
/// covariates); an estimator may leave them empty.
struct ModelFit {
  double log_marglik = 0;
  Eigen::VectorXd coefficients;
};

/// An estimator bound to one population and data set.
using BoundEstimator = std::function<ModelFit(const Model&)>;
/// Pluggable estimator slot: binds itself to a population before a search.
using EstimatorFactory = std::function<BoundEstimator(const Population&, const Dataset&)>;
/// Plain marginal-likelihood contract, e.g. an alternative parameter prior.
using PlainEstimator = std::function<double(const Model&, const Population&, const Dataset&)>;

/// Adapts a plain contract function; fits produced this way carry no coefficients.
EstimatorFactory from_plain(PlainEstimator fn);

/// Jeffreys/BIC estimator working from a centered Gram matrix of the
/// population's columns; each model costs a small pivoted Cholesky.
EstimatorFactory jeffreys_estimator();

/// Centered cross-products of a fixed set of columns against a response.
/// Fits on any column subset with the intercept implicitly included.
class GramSystem {
 public:
  GramSystem(const Eigen::MatrixXd& columns, const Eigen::VectorXd& y);

  /// Fit with intercept plus the listed columns. Coefficients: intercept then
  /// one per listed column (zero for dependent columns).
  FitResult<double> fit(const std::vector<Eigen::Index>& active) const;

  Eigen::Index rows() const { return n_; }
  double y_variance() const { return y_variance_; }

 private:
  Eigen::Index n_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd cross_;
  Eigen::VectorXd means_;
  double y_mean_ = 0;
  double yy_ = 0;
  double y_variance_ = 0;
};

}  // namespace blr
