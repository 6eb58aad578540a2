#pragma once

#include <span>

#include "gimbal/geo.hpp"

namespace gimbal::orientation {

struct BearingResultant {
  double phi = 0.0;
  double r_phi = 0.0;  // normalized resultant length in [0, 1]
  bool deactivated = true;
};

struct ValueOrientation {
  double theta = 0.0;
  double g_ident = 0.0;
  bool deactivated = true;
};

struct AnisotropyRatio {
  double eta = 1.0;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
};

/// Eigenvalues of the symmetric matrix [[a, b], [b, c]], largest first.
struct SymmetricEigen2 {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
};
SymmetricEigen2 eigen_sym2(double a, double b, double c);

/// Everything the weight map needs to know about the local orientation.
struct OrientationResult {
  double phi = 0.0;
  double r_phi = 0.0;
  bool phi_deactivated = true;
  double theta_z = 0.0;
  double g_ident = 0.0;
  bool theta_deactivated = true;
  double eta = 1.0;
  double s_lambda_max = 0.0;
  double s_lambda_min = 0.0;
};

/// Distance-decayed circular mean of bearings, omega = exp(-d^2 / h^2).
/// When r_phi <= eps_phi (or every omega underflows) phi is pinned to 0.
/// Callers pass only pairs with a defined bearing (nonzero displacement).
BearingResultant bearing_resultant(std::span<const double> bearings,
                                   std::span<const double> distances, double h, double eps_phi);

/// Half-angle that diagonalizes the population second-moment matrix of (z, y).
/// g_ident = |Var y - Var z| + |2 Cov(z, y)|; theta = 0 when g_ident <= eps_theta.
ValueOrientation value_orientation(std::span<const double> z, std::span<const double> y,
                                   double eps_theta);

/// Clipped eigenvalue ratio of S = sum(omega~ * d d^T) with normalized decay
/// weights: eta = clip(sqrt(lmax / max(lmin, eps_eta)), 1, eta_max).
AnisotropyRatio anisotropy_ratio(std::span<const geo::Displacement> displacements,
                                 std::span<const double> distances, double h, double eps_eta,
                                 double eta_max);

}  // namespace gimbal::orientation
