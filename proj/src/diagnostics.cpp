#include "gimbal/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gimbal/neighborhood.hpp"
#include "gimbal/stats.hpp"

namespace gimbal::diagnostics {

MoranResult local_moran(std::span<const double> residuals, std::span<const geo::GeoPoint> points,
                        const AdjacencySpec& adjacency) {
  if (residuals.size() != points.size()) {
    throw std::invalid_argument("local_moran: residual/point length mismatch");
  }
  if (adjacency.k_moran < 1) throw ConfigError("local_moran: k_moran must be >= 1");

  const std::size_t n = residuals.size();
  MoranResult out;
  out.values.assign(n, 0.0);
  if (n == 0) return out;

  const double m = stats::mean(residuals);
  const double s = stats::sd(residuals);
  double scale = 0.0;
  for (double r : residuals) scale = std::max(scale, std::abs(r));
  // Spread at rounding level of the residual magnitude counts as constant.
  if (!(s > 1e-13 * scale)) {
    out.zero_variance = true;
    return out;
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (residuals[i] - m) / s;

  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = neighborhood::knn(points, points[i], adjacency.k_moran, i, i);
    double lag = 0.0;
    for (std::size_t j : nb.members) lag += z[j];
    out.values[i] = z[i] * lag / static_cast<double>(nb.size());
  }
  return out;
}

std::vector<bool> reliability_mask(std::span<const LocationRecord> records, double kappa_quantile,
                                   double neff_floor) {
  std::vector<double> kappas;
  for (const auto& r : records) {
    if (r.fit.well_posed) kappas.push_back(r.fit.m_nor_condition);
  }
  const double threshold =
      kappas.empty() ? 0.0 : stats::percentile(kappas, kappa_quantile);

  std::vector<bool> fragile(records.size(), false);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    fragile[i] = !r.fit.well_posed || r.fit.m_nor_condition > threshold ||
                 r.weight_map.n_eff_final < neff_floor;
  }
  return fragile;
}

}  // namespace gimbal::diagnostics
