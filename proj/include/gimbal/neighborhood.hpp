#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gimbal/geo.hpp"

namespace gimbal {

/// Raised for configuration/input problems that make a request unanswerable
/// (e.g. K larger than the eligible pool).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gimbal

namespace gimbal::neighborhood {

/// K nearest members of a target, ordered by (distance, original index).
struct Neighborhood {
  std::optional<std::size_t> target_index;
  std::vector<std::size_t> members;
  std::vector<double> distances;  // meters, nondecreasing
  bool self_included = false;

  std::size_t size() const { return members.size(); }
};

/// Exact brute-force KNN under Haversine distance: every distance is computed
/// and the (distance, index) pairs are fully sorted.
///
/// `target_index` labels the target when it is itself an observation; it only
/// affects `self_included`. `exclude_index` removes one point from the pool.
Neighborhood knn(std::span<const geo::GeoPoint> points, const geo::GeoPoint& target, std::size_t k,
                 std::optional<std::size_t> exclude_index = std::nullopt,
                 std::optional<std::size_t> target_index = std::nullopt);

}  // namespace gimbal::neighborhood
