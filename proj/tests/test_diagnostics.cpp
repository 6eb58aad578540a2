#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gimbal/diagnostics.hpp"
#include "gimbal/stats.hpp"
#include "oracles.hpp"

using namespace gimbal;
using namespace gimbal::diagnostics;

namespace {

std::vector<geo::GeoPoint> line(std::size_t n) {
  std::vector<geo::GeoPoint> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({0.0, 0.01 * static_cast<double>(i)});
  return p;
}

std::vector<geo::GeoPoint> scatter(std::size_t n, std::uint64_t seed) {
  oracle::Gen g(seed);
  std::vector<geo::GeoPoint> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({35 + g.uniform(-0.2, 0.2), 135 + g.uniform(-0.2, 0.2)});
  return p;
}

LocationRecord fake(bool well_posed, double kappa, double neff) {
  LocationRecord r;
  r.fit.well_posed = well_posed;
  r.fit.m_nor_condition = kappa;
  r.weight_map.n_eff_final = neff;
  return r;
}

}  // namespace

TEST_CASE("constant residuals give zeros and the zero-variance flag") {
  const auto m = local_moran(std::vector<double>(6, 0.4), line(6), {2});
  CHECK(m.zero_variance);
  for (double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("alternating residuals on a line are negatively autocorrelated") {
  const std::vector<double> r = {1, -1, 1, -1, 1, -1};
  const auto m = local_moran(r, line(6), {2});
  CHECK_FALSE(m.zero_variance);
  for (int i = 1; i < 5; ++i) {
    CHECK(m.values[i] < 0);
    CHECK(m.values[i] == doctest::Approx(-1.0).epsilon(1e-12));
  }
  // The end point sees one opposite and one equal neighbor.
  CHECK(std::abs(m.values[0]) < 1e-12);
}

TEST_CASE("random residuals: mean local Moran near zero") {
  oracle::Gen g(61);
  const auto pts = scatter(600, 62);
  std::vector<double> r(pts.size());
  for (auto& v : r) v = g.normal();
  const auto m = local_moran(r, pts);
  const double se = stats::sd(m.values) / std::sqrt(static_cast<double>(m.values.size()));
  CHECK(std::abs(stats::mean(m.values)) < 3 * se);
}

TEST_CASE("local Moran is invariant to affine rescaling and is not clipped") {
  oracle::Gen g(63);
  const auto pts = scatter(200, 64);
  std::vector<double> r(pts.size());
  for (auto& v : r) v = g.normal();
  r[0] = 9.0;
  r[1] = 8.5;
  const auto a = local_moran(r, pts);
  std::vector<double> s = r;
  for (auto& v : s) v = -4.0 * v + 17.0;
  const auto b = local_moran(s, pts);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-9);
  const double top = *std::max_element(a.values.begin(), a.values.end());
  CHECK(top > 1.0);
}

TEST_CASE("local Moran matches a direct adjacency computation") {
  oracle::Gen g(65);
  const auto pts = scatter(80, 66);
  std::vector<double> r(pts.size()), lat, lon;
  for (auto& v : r) v = g.normal();
  for (const auto& p : pts) {
    lat.push_back(p.lat);
    lon.push_back(p.lon);
  }
  const double mu = stats::mean(r), sd = stats::sd(r);
  const auto m = local_moran(r, pts, {5});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nb = oracle::knn_scan(lat, lon, lat[i], lon[i], 5, static_cast<long>(i));
    double lag = 0;
    for (auto j : nb) lag += (r[j] - mu) / sd / 5.0;
    CHECK(m.values[i] == doctest::Approx((r[i] - mu) / sd * lag).epsilon(1e-12));
  }
}

TEST_CASE("mask: well-conditioned records with no floor are not flagged") {
  std::vector<LocationRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back(fake(true, 10.0 + i, 20.0));
  const auto f = reliability_mask(recs, 1.0, 0.0);
  CHECK(std::count(f.begin(), f.end(), true) == 0);
}

TEST_CASE("mask: ill-posed records are always fragile") {
  std::vector<LocationRecord> recs = {fake(true, 5, 20), fake(false, 1e30, 20), fake(true, 6, 20)};
  const auto f = reliability_mask(recs, 1.0, 0.0);
  CHECK(f == std::vector<bool>{false, true, false});
}

TEST_CASE("mask: quantile 0.95 on 100 records flags exactly the top five kappas") {
  oracle::Gen g(67);
  std::vector<LocationRecord> recs;
  std::vector<double> k;
  for (int i = 0; i < 100; ++i) {
    k.push_back(g.uniform(1, 1000));
    recs.push_back(fake(true, k.back(), 30));
  }
  auto sorted = k;
  std::sort(sorted.begin(), sorted.end());
  const auto f = reliability_mask(recs, 0.95, 0.0);
  CHECK(std::count(f.begin(), f.end(), true) == 5);
  for (int i = 0; i < 100; ++i) CHECK(f[i] == (k[i] >= sorted[95]));

  recs[3].weight_map.n_eff_final = 2.0;
  const auto g2 = reliability_mask(recs, 0.95, 4.0);
  CHECK(g2[3]);
  CHECK(std::count(g2.begin(), g2.end(), true) == 5 + (k[3] >= sorted[95] ? 0 : 1));
}

TEST_CASE("mask is monotone in the kappa quantile") {
  oracle::Gen g(68);
  std::vector<LocationRecord> recs;
  for (int i = 0; i < 200; ++i) recs.push_back(fake(i % 37 != 0, g.uniform(1, 1e4), g.uniform(1, 30)));
  auto prev = reliability_mask(recs, 1.0, 5.0);
  for (double q = 0.99; q >= 0.0; q -= 0.01) {
    const auto cur = reliability_mask(recs, q, 5.0);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (prev[i]) CHECK(cur[i]);
    }
    prev = cur;
  }
}
