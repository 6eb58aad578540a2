#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gimbal/geo.hpp"
#include "gimbal/neighborhood.hpp"
#include "gimbal/orientation.hpp"
#include "gimbal/solver.hpp"
#include "gimbal/weights.hpp"

namespace gimbal {

enum class ThetaMode { on, off };
enum class PhiMode { on, forced_zero };
enum class EtaMode { geometry, forced_one };

/// Deterministic tuning constants of the estimator. Defaults are the common
/// simulation settings (K=50, h=3000 m, gamma=1, n0=15, n_min=4).
struct GimbalConfig {
  std::size_t k = 50;
  double h = 3000.0;         // meters
  double gamma = 1.0;
  double u = 0.0;            // distance-trend scale in meters; <= 0 means "use h"
  double n0 = 15.0;
  double n_min = 4.0;
  double eta_max = 50.0;
  double eps_phi = 1e-3;
  double eps_theta = 1e-8;
  double eps_eta = 1e-8;
  ThetaMode theta_mode = ThetaMode::on;
  PhiMode phi_mode = PhiMode::on;
  EtaMode eta_mode = EtaMode::geometry;
  std::uint64_t seed = 0;

  double distance_scale() const { return u > 0.0 ? u : h; }
  /// Throws ConfigError on a nonsensical combination.
  void validate() const;
};

/// phi = 0, theta = 0, eta = 1 on top of `base`.
GimbalConfig isotropic_proxy(GimbalConfig base);

struct Dataset {
  std::vector<geo::GeoPoint> points;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> ids;  // optional; empty or one per row

  std::size_t size() const { return points.size(); }
  /// Throws ConfigError naming the first bad row.
  void validate() const;
};

enum class Branch : std::uint8_t {
  phi_iso = 1u << 0,
  theta_nonident = 1u << 1,
  uniform_fallback = 1u << 2,
  underflow_fallback = 1u << 3,
  ill_posed = 1u << 4,
};

class BranchSet {
 public:
  void insert(Branch b) { bits_ |= static_cast<std::uint8_t>(b); }
  bool contains(Branch b) const { return (bits_ & static_cast<std::uint8_t>(b)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::uint8_t bits() const { return bits_; }
  /// Pipe-separated names in declaration order, e.g. "phi_iso|ill_posed".
  std::string to_string() const;

  friend bool operator==(const BranchSet&, const BranchSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct LocationRecord {
  std::optional<std::size_t> index;  // absent for out-of-sample targets
  geo::GeoPoint location;
  double target_x = 0.0;
  neighborhood::Neighborhood neighborhood;
  weights::RealizedWeightMap weight_map;
  solver::LocalFit fit;
  double cond_wls2 = std::numeric_limits<double>::quiet_NaN();
  /// beta0 + beta1 * x at the target (distance trend evaluated at z = 0).
  double fitted_at_target = std::numeric_limits<double>::quiet_NaN();
  BranchSet branches;

  const orientation::OrientationResult& orientation() const { return weight_map.orientation; }
  bool well_posed() const { return fit.well_posed; }
};

struct LocalDesign {
  Eigen::MatrixXd x;  // columns [1, x_j, z_ij]
  Eigen::VectorXd y;
  std::vector<double> z;
};

/// Population mean / standard deviation of the covariate, used only to build
/// the standardized [1, x] design of the cond_wls2 diagnostic.
struct CovariateMoments {
  double mean = 0.0;
  double sd = 0.0;
};
CovariateMoments covariate_moments(std::span<const double> x);

LocalDesign build_local_design(const Dataset& data, const neighborhood::Neighborhood& nb, double u);

/// Full realized map for one in-sample target (target belongs to its own
/// neighborhood at distance zero).
LocationRecord fit_location(const Dataset& data, const GimbalConfig& config,
                            std::size_t target_index);

/// fit_location for every row. `threads == 0` uses all hardware threads.
/// Output order always matches input order.
std::vector<LocationRecord> fit_all(const Dataset& data, const GimbalConfig& config,
                                    unsigned threads = 0);

struct Prediction {
  std::optional<double> value;  // absent when the local solve is ill-posed
  LocationRecord record;
};

/// Out-of-sample prediction: neighbors come from `training` only and the
/// distance-trend regressor is zero at the target.
Prediction predict_at(const Dataset& training, const GimbalConfig& config,
                      const geo::GeoPoint& target, double target_x);

/// Unweighted mean of the k nearest training residuals.
double residual_knn_correct(std::span<const double> training_residuals,
                            std::span<const geo::GeoPoint> training_points,
                            const geo::GeoPoint& target, std::size_t k_resid);

/// y_i - fitted_at_target per record; NaN where the fit is ill-posed.
std::vector<double> target_residuals(const Dataset& data, std::span<const LocationRecord> records);

}  // namespace gimbal
