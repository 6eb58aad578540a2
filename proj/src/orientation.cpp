#include "gimbal/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gimbal::orientation {

namespace {

double decay(double d, double h) { return std::exp(-(d * d) / (h * h)); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

SymmetricEigen2 eigen_sym2(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  return {mean + radius, mean - radius};
}

BearingResultant bearing_resultant(std::span<const double> bearings,
                                   std::span<const double> distances, double h, double eps_phi) {
  require_same_size(bearings.size(), distances.size(), "bearing_resultant");
  if (!(h > 0.0)) throw std::invalid_argument("bearing_resultant: h must be positive");

  double sum_w = 0.0;
  double sum_cos = 0.0;
  double sum_sin = 0.0;
  for (std::size_t j = 0; j < bearings.size(); ++j) {
    const double w = decay(distances[j], h);
    sum_w += w;
    sum_cos += w * std::cos(bearings[j]);
    sum_sin += w * std::sin(bearings[j]);
  }

  BearingResultant out;
  if (!(sum_w > 0.0)) return out;
  out.r_phi = std::min(1.0, std::hypot(sum_cos, sum_sin) / sum_w);
  if (out.r_phi > eps_phi) {
    out.phi = std::atan2(sum_sin, sum_cos);
    out.deactivated = false;
  }
  return out;
}

ValueOrientation value_orientation(std::span<const double> z, std::span<const double> y,
                                   double eps_theta) {
  require_same_size(z.size(), y.size(), "value_orientation");
  if (z.empty()) throw std::invalid_argument("value_orientation: empty neighborhood");

  const double n = static_cast<double>(z.size());
  double z_bar = 0.0;
  double y_bar = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    z_bar += z[j];
    y_bar += y[j];
  }
  z_bar /= n;
  y_bar /= n;

  double var_z = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double dz = z[j] - z_bar;
    const double dy = y[j] - y_bar;
    var_z += dz * dz;
    var_y += dy * dy;
    cov += dz * dy;
  }
  var_z /= n;
  var_y /= n;
  cov /= n;

  ValueOrientation out;
  out.g_ident = std::abs(var_y - var_z) + std::abs(2.0 * cov);
  if (out.g_ident > eps_theta) {
    out.theta = 0.5 * std::atan2(var_y - var_z, 2.0 * cov);
    out.deactivated = false;
  }
  return out;
}

AnisotropyRatio anisotropy_ratio(std::span<const geo::Displacement> displacements,
                                 std::span<const double> distances, double h, double eps_eta,
                                 double eta_max) {
  require_same_size(displacements.size(), distances.size(), "anisotropy_ratio");
  if (!(h > 0.0)) throw std::invalid_argument("anisotropy_ratio: h must be positive");
  if (!(eta_max >= 1.0)) throw std::invalid_argument("anisotropy_ratio: eta_max must be >= 1");

  double sum_w = 0.0;
  for (double d : distances) sum_w += decay(d, h);

  AnisotropyRatio out;
  if (!(sum_w > 0.0)) return out;

  double s_ee = 0.0;
  double s_en = 0.0;
  double s_nn = 0.0;
  for (std::size_t j = 0; j < displacements.size(); ++j) {
    const double w = decay(distances[j], h) / sum_w;
    const auto& d = displacements[j];
    s_ee += w * d.east * d.east;
    s_en += w * d.east * d.north;
    s_nn += w * d.north * d.north;
  }

  const auto eig = eigen_sym2(s_ee, s_en, s_nn);
  // S is PSD; rounding can push the small eigenvalue a hair below zero.
  out.lambda_max = std::max(eig.lambda_max, 0.0);
  out.lambda_min = std::clamp(eig.lambda_min, 0.0, out.lambda_max);
  const double eta_raw = std::sqrt(out.lambda_max / std::max(out.lambda_min, eps_eta));
  out.eta = std::min(std::max(eta_raw, 1.0), eta_max);
  return out;
}

}  // namespace gimbal::orientation
