#include "gimbal/neighborhood.hpp"

#include <algorithm>
#include <utility>

namespace gimbal::neighborhood {

Neighborhood knn(std::span<const geo::GeoPoint> points, const geo::GeoPoint& target, std::size_t k,
                 std::optional<std::size_t> exclude_index,
                 std::optional<std::size_t> target_index) {
  const std::size_t eligible =
      points.size() - ((exclude_index && *exclude_index < points.size()) ? 1 : 0);
  if (k == 0 || k > eligible) {
    std::string where = target_index ? " (target " + std::to_string(*target_index) + ")" : "";
    throw ConfigError("knn: K=" + std::to_string(k) + " but only " + std::to_string(eligible) +
                      " eligible points" + where);
  }

  std::vector<std::pair<double, std::size_t>> scan;
  scan.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (exclude_index && j == *exclude_index) continue;
    scan.emplace_back(geo::haversine_distance(target, points[j]), j);
  }
  std::sort(scan.begin(), scan.end());

  Neighborhood out;
  out.target_index = target_index;
  out.members.reserve(k);
  out.distances.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    out.distances.push_back(scan[m].first);
    out.members.push_back(scan[m].second);
    if (target_index && scan[m].second == *target_index) out.self_included = true;
  }
  return out;
}

}  // namespace gimbal::neighborhood
