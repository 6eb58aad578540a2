#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "gimbal/neighborhood.hpp"
#include "oracles.hpp"

using gimbal::ConfigError;
using gimbal::geo::GeoPoint;
using gimbal::neighborhood::knn;

namespace {

std::vector<GeoPoint> cloud(std::size_t n, std::uint64_t seed) {
  oracle::Gen g(seed);
  std::vector<GeoPoint> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({35 + g.uniform(-0.1, 0.1), 135 + g.uniform(-0.1, 0.1)});
  return p;
}

}  // namespace

TEST_CASE("a target that is an observation is its own first neighbor") {
  const auto pts = cloud(30, 1);
  const auto nb = knn(pts, pts[7], 5, std::nullopt, 7);
  CHECK(nb.members[0] == 7);
  CHECK(nb.distances[0] == 0.0);
  CHECK(nb.self_included);
  CHECK(nb.target_index == 7u);
}

TEST_CASE("K = N returns every index") {
  const auto pts = cloud(25, 2);
  auto nb = knn(pts, pts[3], pts.size());
  std::vector<std::size_t> members = nb.members;
  std::sort(members.begin(), members.end());
  std::vector<std::size_t> all(pts.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(members == all);
}

TEST_CASE("members match an exhaustive scan") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = cloud(50, 100 + seed);
    std::vector<double> lat, lon;
    for (const auto& p : pts) {
      lat.push_back(p.lat);
      lon.push_back(p.lon);
    }
    const GeoPoint t{35 + 0.01 * static_cast<double>(seed), 135.02};
    CHECK(knn(pts, t, 5).members == oracle::knn_scan(lat, lon, t.lat, t.lon, 5));
    CHECK(knn(pts, pts[seed], 8, seed).members ==
          oracle::knn_scan(lat, lon, pts[seed].lat, pts[seed].lon, 8, static_cast<long>(seed)));
  }
}

TEST_CASE("excluded index is never a member") {
  const auto pts = cloud(12, 3);
  const auto nb = knn(pts, pts[4], 11, 4, 4);
  CHECK(std::find(nb.members.begin(), nb.members.end(), 4u) == nb.members.end());
  CHECK_FALSE(nb.self_included);
}

TEST_CASE("ties are broken by the smaller original index") {
  std::vector<GeoPoint> pts = {{1, 1}, {0, 0}, {1, 1}, {0, 0}, {1, 1}};
  const auto nb = knn(pts, {1, 1}, 4);
  CHECK(nb.members == std::vector<std::size_t>{0, 2, 4, 1});
  CHECK(nb.distances[0] == 0.0);
  CHECK(nb.distances[2] == 0.0);
}

TEST_CASE("distances are nondecreasing, members unique, calls repeatable") {
  const auto pts = cloud(200, 4);
  const auto a = knn(pts, {35.0, 135.0}, 40);
  const auto b = knn(pts, {35.0, 135.0}, 40);
  CHECK(a.members == b.members);
  CHECK(a.distances == b.distances);
  CHECK(std::is_sorted(a.distances.begin(), a.distances.end()));
  auto m = a.members;
  std::sort(m.begin(), m.end());
  CHECK(std::adjacent_find(m.begin(), m.end()) == m.end());
}

TEST_CASE("K larger than the eligible pool is a configuration error naming the target") {
  const auto pts = cloud(6, 5);
  CHECK_THROWS_AS(knn(pts, pts[0], 7), ConfigError);
  CHECK_THROWS_AS(knn(pts, pts[0], 0), ConfigError);
  CHECK_THROWS_AS(knn(pts, pts[2], 6, 2, 2), ConfigError);
  try {
    knn(pts, pts[2], 6, 2, 2);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("target 2") != std::string::npos);
  }
}
