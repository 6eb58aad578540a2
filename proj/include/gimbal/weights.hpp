#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "gimbal/geo.hpp"
#include "gimbal/orientation.hpp"

namespace gimbal::weights {

/// Output of the weight map for one neighborhood, with branch provenance.
///
/// `n_eff_post` is the ESS of the recomputed weights at `h_eff` *before* the
/// uniform-fallback test (the quantity the fallback rule compares to n_min).
/// `n_eff_final` is the ESS of `weights`, i.e. n_i whenever the fallback fired.
struct RealizedWeightMap {
  orientation::OrientationResult orientation;
  double h_nominal = 0.0;
  double h_eff = 0.0;
  double n_eff_raw = 0.0;  // 0 when every raw weight underflowed
  double n_eff_post = 0.0;
  double n_eff_final = 0.0;
  bool fallback_uniform = false;
  bool underflow_fallback = false;
  std::vector<double> raw_normalized;  // at nominal h; empty on underflow
  std::vector<double> weights;         // final, sums to 1
};

/// Counts the work done by one_shot_safeguard so tests can pin the one-shot
/// property.
struct SafeguardTrace {
  int metric_builds = 0;
  int kernel_evaluations = 0;
  int bandwidth_corrections = 0;
};

/// M = Q diag(h^-2, h^-2 eta^-2) Q^T with Q = R(phi) R(theta).
Eigen::Matrix2d build_metric(double phi, double theta, double eta, double h);
Eigen::Matrix2d build_metric(const orientation::OrientationResult& o, double h);

/// exp(-d^T M d) per displacement.
std::vector<double> raw_weights(std::span<const geo::Displacement> displacements,
                                const Eigen::Matrix2d& metric);

/// 1 / sum(w^2) for weights that already sum to one.
/// Throws std::invalid_argument for an all-zero vector.
double ess(std::span<const double> normalized_weights);

/// One bandwidth correction h_eff = h * sqrt(n0 / n_eff_raw) with the basis Q
/// and eta frozen, then the uniform fallback when the recomputed ESS < n_min.
RealizedWeightMap one_shot_safeguard(std::span<const geo::Displacement> displacements,
                                     const orientation::OrientationResult& orientation, double h,
                                     double n0, double n_min, SafeguardTrace* trace = nullptr);

}  // namespace gimbal::weights
