#pragma once

#include <Eigen/Core>

namespace blr::numeric {

double normal_cdf(double x);
/// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

/// Gauss-Legendre nodes (column 0) and weights (column 1) on [-1, 1] from the
/// Golub-Welsch eigenproblem.
Eigen::MatrixX2d gauss_legendre(int order);

/// P(Z1 <= h, Z2 <= k) for standard bivariate normal with correlation rho,
/// by quadrature of the Plackett integral in the angle asin(r).
double bivariate_normal_cdf(double h, double k, double rho);

}  // namespace blr::numeric
