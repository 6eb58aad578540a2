#pragma once

#include <span>
#include <vector>

#include "gimbal/engine.hpp"
#include "gimbal/geo.hpp"

namespace gimbal::diagnostics {

/// Fixed residual adjacency: row-standardized KNN (self excluded). It never
/// looks at the regression weights.
struct AdjacencySpec {
  std::size_t k_moran = 8;
};

struct MoranResult {
  std::vector<double> values;
  bool zero_variance = false;  // residuals constant up to rounding; values are all 0
};

/// I_i = z_i * sum_j a_ij z_j on standardized residuals. Not clipped.
MoranResult local_moran(std::span<const double> residuals, std::span<const geo::GeoPoint> points,
                        const AdjacencySpec& adjacency = {});

/// A location is fragile when it is ill-posed, when kappa(M_nor) exceeds the
/// empirical `kappa_quantile` of the well-posed locations, or when the ESS of
/// its final weights is below `neff_floor`.
std::vector<bool> reliability_mask(std::span<const LocationRecord> records, double kappa_quantile,
                                   double neff_floor);

}  // namespace gimbal::diagnostics
