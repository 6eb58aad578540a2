#pragma once

#include <limits>
#include <span>

#include <Eigen/Core>

namespace gimbal::solver {

/// Floor applied to the smallest eigenvalue in every condition number.
inline constexpr double kKappaFloor = 1e-12;
/// lambda_min / lambda_max at or below this declares the normal matrix singular.
inline constexpr double kSingularRatio = 1e-12;

struct FitSummary {
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool r2_defined = false;  // false for a constant response (r2 reported as 0)
  Eigen::VectorXd residuals;
};

struct LocalFit {
  bool well_posed = false;
  Eigen::VectorXd beta;  // empty unless well_posed
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double m_nor_condition = std::numeric_limits<double>::infinity();
  double operator_norm_bound = std::numeric_limits<double>::quiet_NaN();
  FitSummary summary;  // populated only when well_posed
};

/// M_nor = X^T X + 2 gamma X^T W X.
Eigen::MatrixXd modulated_normal_matrix(const Eigen::MatrixXd& x, std::span<const double> w,
                                        double gamma);

/// Closed-form solve of (X^T X + 2g X^T W X) beta = X^T y + 2g X^T W y.
/// A singular normal matrix yields well_posed = false and no beta.
LocalFit solve_local(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::span<const double> w, double gamma);

/// ||M_nor^-1||_2 * ||X^T + 2g X^T W||_2, an upper bound on the Lipschitz
/// constant of y -> beta. Throws std::domain_error when M_nor is singular.
double stability_bound(const Eigen::MatrixXd& x, std::span<const double> w, double gamma);

/// Unweighted residual summaries over the neighborhood.
FitSummary local_fit_summaries(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta);

/// kappa(X^T W X) = lambda_max / max(lambda_min, kKappaFloor) for a
/// standardized two-column design [1, x].
double cond_wls2(const Eigen::MatrixXd& x2, std::span<const double> w);

}  // namespace gimbal::solver
