#include "gimbal/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gimbal::weights {

namespace {

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::vector<double> scaled(std::vector<double> v, double total) {
  for (double& x : v) x /= total;
  return v;
}

std::vector<double> uniform(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace

Eigen::Matrix2d build_metric(double phi, double theta, double eta, double h) {
  const Eigen::Matrix2d q = geo::rotation_matrix(phi) * geo::rotation_matrix(theta);
  const double inv_h2 = 1.0 / (h * h);
  Eigen::Matrix2d lambda = Eigen::Matrix2d::Zero();
  lambda(0, 0) = inv_h2;
  lambda(1, 1) = inv_h2 / (eta * eta);
  Eigen::Matrix2d m = q * lambda * q.transpose();
  m(0, 1) = m(1, 0) = 0.5 * (m(0, 1) + m(1, 0));
  return m;
}

Eigen::Matrix2d build_metric(const orientation::OrientationResult& o, double h) {
  return build_metric(o.phi_deactivated ? 0.0 : o.phi, o.theta_z, o.eta, h);
}

std::vector<double> raw_weights(std::span<const geo::Displacement> displacements,
                                const Eigen::Matrix2d& metric) {
  std::vector<double> w;
  w.reserve(displacements.size());
  for (const auto& d : displacements) {
    const double e = d.east;
    const double n = d.north;
    const double q = metric(0, 0) * e * e + (metric(0, 1) + metric(1, 0)) * e * n +
                     metric(1, 1) * n * n;
    w.push_back(std::exp(-q));
  }
  return w;
}

// (sum r)^2 / sum r^2 with r = w / max(w); returns exactly n for a uniform
// vector of length n.
double ess(std::span<const double> normalized_weights) {
  double top = 0.0;
  for (double w : normalized_weights) top = std::max(top, std::abs(w));
  if (!(top > 0.0)) throw std::invalid_argument("ess: weight vector is identically zero");
  double s = 0.0;
  double sq = 0.0;
  for (double w : normalized_weights) {
    const double r = w / top;
    s += r;
    sq += r * r;
  }
  return s * s / sq;
}

RealizedWeightMap one_shot_safeguard(std::span<const geo::Displacement> displacements,
                                     const orientation::OrientationResult& orientation, double h,
                                     double n0, double n_min, SafeguardTrace* trace) {
  if (displacements.empty()) throw std::invalid_argument("one_shot_safeguard: empty neighborhood");
  if (!(h > 0.0) || !(n0 > 0.0) || !(n_min > 0.0)) {
    throw std::invalid_argument("one_shot_safeguard: h, n0 and n_min must be positive");
  }

  const std::size_t n = displacements.size();
  RealizedWeightMap out;
  out.orientation = orientation;
  out.h_nominal = h;
  out.h_eff = h;

  auto evaluate = [&](double bandwidth) {
    if (trace) {
      ++trace->metric_builds;
      ++trace->kernel_evaluations;
    }
    return raw_weights(displacements, build_metric(orientation, bandwidth));
  };
  auto fall_back = [&](bool underflow) {
    out.fallback_uniform = true;
    out.underflow_fallback = underflow;
    out.weights = uniform(n);
    out.n_eff_final = static_cast<double>(n);
  };

  const std::vector<double> raw = evaluate(h);
  const double s_raw = sum_of(raw);
  if (!(s_raw > 0.0)) {
    out.n_eff_raw = 0.0;
    out.n_eff_post = static_cast<double>(n);
    fall_back(true);
    return out;
  }
  out.raw_normalized = scaled(raw, s_raw);
  out.n_eff_raw = ess(out.raw_normalized);

  // Applied unconditionally: n_eff_raw > n0 shrinks the bandwidth.
  out.h_eff = h * std::sqrt(n0 / out.n_eff_raw);
  if (trace) ++trace->bandwidth_corrections;

  const std::vector<double> recomputed = evaluate(out.h_eff);
  const double s_post = sum_of(recomputed);
  if (!(s_post > 0.0)) {
    out.n_eff_post = static_cast<double>(n);
    fall_back(true);
    return out;
  }
  std::vector<double> corrected = scaled(recomputed, s_post);
  out.n_eff_post = ess(corrected);

  if (out.n_eff_post < n_min) {
    fall_back(false);
  } else {
    out.weights = std::move(corrected);
    out.n_eff_final = out.n_eff_post;
  }
  return out;
}

}  // namespace gimbal::weights
