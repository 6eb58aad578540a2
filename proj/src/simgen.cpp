#include "gimbal/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gimbal::simgen {

void SimSpec::validate() const {
  if (n < 1) throw ConfigError("simspec: n must be >= 1");
  if (!(rho >= 1.0)) throw ConfigError("simspec: rho must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("simspec: sigma must be >= 0");
  if (!(extent > 0.0)) throw ConfigError("simspec: extent must be positive");
  if (!geo::is_valid({lat0, lon0})) throw ConfigError("simspec: invalid reference point");
}

Eigen::Matrix2d deformation_matrix(double rho, double psi) {
  return geo::rotation_matrix(-psi) * Eigen::Vector2d(rho, 1.0).asDiagonal() *
         geo::rotation_matrix(psi);
}

LocationSample sample_locations(const SimSpec& spec) {
  spec.validate();
  rng::Rng gen(spec.seed, rng::Stream::locations);

  std::vector<Eigen::Vector2d> raw(spec.n);
  for (auto& p : raw) {
    if (spec.sampling == Sampling::uniform) {
      const double e = gen.uniform(-spec.extent, spec.extent);
      const double n = gen.uniform(-spec.extent, spec.extent);
      p = {e, n};
    } else {
      const double sd = 0.5 * spec.extent;
      const double e = sd * gen.normal();
      const double n = sd * gen.normal();
      p = {e, n};
    }
  }

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : raw) mean += p;
  mean /= static_cast<double>(spec.n);

  const Eigen::Matrix2d t = deformation_matrix(spec.rho, spec.psi);
  const bool identity = spec.rho == 1.0;
  const geo::GeoPoint origin{spec.lat0, spec.lon0};

  LocationSample out;
  out.planar.reserve(spec.n);
  out.points.reserve(spec.n);
  for (const auto& p : raw) {
    const Eigen::Vector2d q = identity ? p : Eigen::Vector2d(t * (p - mean) + mean);
    const geo::Displacement d{q.x(), q.y()};
    out.planar.push_back(d);
    out.points.push_back(geo::meters_to_geo(origin, d));
  }
  return out;
}

std::vector<double> beta_surface(std::span<const double> lats, double delta_beta) {
  if (lats.empty()) throw std::invalid_argument("beta_surface: empty input");
  double mean = 0.0;
  for (double v : lats) mean += v;
  mean /= static_cast<double>(lats.size());
  const auto [lo, hi] = std::minmax_element(lats.begin(), lats.end());
  const double range = *hi - *lo + 1e-12;

  std::vector<double> out;
  out.reserve(lats.size());
  for (double v : lats) out.push_back(1.0 + delta_beta * (v - mean) / range);
  return out;
}

std::vector<double> gen_response(const LocationSample& locations, std::span<const double> x,
                                 const SimSpec& spec, rng::Rng& noise) {
  const std::size_t n = locations.points.size();
  if (x.size() != n) throw std::invalid_argument("gen_response: covariate length mismatch");

  std::vector<double> lats(n);
  for (std::size_t i = 0; i < n; ++i) lats[i] = locations.points[i].lat;
  const auto beta1 = beta_surface(lats, spec.delta_beta);

  std::vector<double> radial(n, 0.0);
  if (spec.c_rad != 0.0) {
    double ce = 0.0;
    double cn = 0.0;
    for (const auto& p : locations.planar) {
      ce += p.east;
      cn += p.north;
    }
    ce /= static_cast<double>(n);
    cn /= static_cast<double>(n);
    double r_bar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      radial[i] = std::hypot(locations.planar[i].east - ce, locations.planar[i].north - cn);
      r_bar += radial[i];
    }
    r_bar /= static_cast<double>(n);
    for (double& r : radial) r = spec.c_rad * r / (r_bar + 1e-12);
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = spec.sigma > 0.0 ? spec.sigma * noise.normal() : 0.0;
    y[i] = beta1[i] * x[i] + radial[i] + eps;
  }
  return y;
}

SimDataset generate(const SimSpec& spec) {
  SimDataset out;
  out.locations = sample_locations(spec);
  const std::size_t n = spec.n;

  rng::Rng cov(spec.seed, rng::Stream::covariates);
  out.data.x.resize(n);
  for (double& v : out.data.x) v = cov.normal();

  rng::Rng noise(spec.seed, rng::Stream::noise);
  out.data.y = gen_response(out.locations, out.data.x, spec, noise);
  out.data.points = out.locations.points;

  std::vector<double> lats(n);
  for (std::size_t i = 0; i < n; ++i) lats[i] = out.data.points[i].lat;
  out.beta1 = beta_surface(lats, spec.delta_beta);
  return out;
}

std::vector<bool> holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ConfigError("holdout_split: test fraction must lie in [0, 1]");
  }
  rng::Rng split(seed, rng::Stream::split);
  std::vector<bool> test(n);
  for (std::size_t i = 0; i < n; ++i) test[i] = split.uniform01() < test_fraction;
  return test;
}

}  // namespace gimbal::simgen
