#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gimbal/engine.hpp"
#include "gimbal/geo.hpp"
#include "gimbal/rng.hpp"

namespace gimbal::simgen {

enum class Sampling { uniform, gaussian };

/// Parameters of the synthetic data-generating process. Locations live on a
/// local East-North meter plane around (lat0, lon0) and are converted to
/// degrees after the rotate-stretch deformation.
struct SimSpec {
  std::size_t n = 1200;
  double lat0 = 35.0;
  double lon0 = 135.0;
  double extent = 10000.0;  // half-width (uniform) or 2 x std (gaussian), meters
  Sampling sampling = Sampling::uniform;
  double rho = 1.0;
  double psi = 0.0;
  double delta_beta = 0.5;
  double sigma = 1.0;
  double c_rad = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LocationSample {
  std::vector<geo::Displacement> planar;  // deformed meter-plane coordinates
  std::vector<geo::GeoPoint> points;
};

struct SimDataset {
  Dataset data;
  std::vector<double> beta1;  // true coefficient surface per row
  LocationSample locations;
};

/// T(rho, psi) = R(-psi) diag(rho, 1) R(psi).
Eigen::Matrix2d deformation_matrix(double rho, double psi);

LocationSample sample_locations(const SimSpec& spec);

/// 1 + delta_beta * (lat - mean) / (max - min + 1e-12).
std::vector<double> beta_surface(std::span<const double> lats, double delta_beta);

/// beta1 * x + c_rad * r / (mean r + 1e-12) + N(0, sigma^2), with r the planar
/// distance to the sample centroid. Noise is drawn from `noise`.
std::vector<double> gen_response(const LocationSample& locations, std::span<const double> x,
                                 const SimSpec& spec, rng::Rng& noise);

/// Locations, standard-normal covariate and response from separate substreams.
SimDataset generate(const SimSpec& spec);

/// Hold-out assignment drawn from the split substream: row i goes to the test
/// side when its uniform draw is below `test_fraction`.
std::vector<bool> holdout_split(std::size_t n, double test_fraction, std::uint64_t seed);

}  // namespace gimbal::simgen
