#include "gimbal/engine.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace gimbal {

namespace {

/// Shared path for in-sample and out-of-sample targets.
LocationRecord realize(const Dataset& data, const GimbalConfig& cfg, const CovariateMoments& mom,
                       const geo::GeoPoint& target, double target_x,
                       std::optional<std::size_t> target_index,
                       std::optional<std::size_t> exclude_index) {
  LocationRecord rec;
  rec.index = target_index;
  rec.location = target;
  rec.target_x = target_x;
  rec.neighborhood = neighborhood::knn(data.points, target, cfg.k, exclude_index, target_index);
  const auto& nb = rec.neighborhood;
  const std::size_t n = nb.size();

  std::vector<geo::Displacement> deltas;
  deltas.reserve(n);
  std::vector<double> bearings;
  std::vector<double> bearing_dist;
  for (std::size_t m = 0; m < n; ++m) {
    const auto d = geo::tangent_displacement(target, data.points[nb.members[m]]);
    deltas.push_back(d);
    if (d.east != 0.0 || d.north != 0.0) {
      bearings.push_back(geo::bearing(d));
      bearing_dist.push_back(nb.distances[m]);
    }
  }

  const LocalDesign design = build_local_design(data, nb, cfg.distance_scale());
  std::vector<double> y_local(n);
  for (std::size_t m = 0; m < n; ++m) y_local[m] = design.y(static_cast<Eigen::Index>(m));

  const auto br = orientation::bearing_resultant(bearings, bearing_dist, cfg.h, cfg.eps_phi);
  const auto vo = orientation::value_orientation(design.z, y_local, cfg.eps_theta);
  const auto ar =
      orientation::anisotropy_ratio(deltas, nb.distances, cfg.h, cfg.eps_eta, cfg.eta_max);

  orientation::OrientationResult o;
  o.r_phi = br.r_phi;
  o.phi = br.phi;
  o.phi_deactivated = br.deactivated;
  if (cfg.phi_mode == PhiMode::forced_zero) {
    o.phi = 0.0;
    o.phi_deactivated = true;
  }
  o.g_ident = vo.g_ident;
  o.theta_z = vo.theta;
  o.theta_deactivated = vo.deactivated;
  if (cfg.theta_mode == ThetaMode::off) {
    o.theta_z = 0.0;
    o.theta_deactivated = true;
  }
  o.s_lambda_max = ar.lambda_max;
  o.s_lambda_min = ar.lambda_min;
  o.eta = cfg.eta_mode == EtaMode::forced_one ? 1.0 : ar.eta;

  rec.weight_map = weights::one_shot_safeguard(deltas, o, cfg.h, cfg.n0, cfg.n_min);
  const auto& w = rec.weight_map.weights;

  rec.fit = solver::solve_local(design.x, design.y, w, cfg.gamma);

  Eigen::MatrixXd x2(static_cast<Eigen::Index>(n), 2);
  for (std::size_t m = 0; m < n; ++m) {
    const double xv = data.x[nb.members[m]];
    const auto row = static_cast<Eigen::Index>(m);
    x2(row, 0) = 1.0;
    x2(row, 1) = mom.sd > 0.0 ? (xv - mom.mean) / mom.sd : 0.0;
  }
  rec.cond_wls2 = solver::cond_wls2(x2, w);

  if (rec.fit.well_posed) {
    rec.fitted_at_target = rec.fit.beta(0) + rec.fit.beta(1) * target_x;
  }

  if (o.phi_deactivated) rec.branches.insert(Branch::phi_iso);
  if (o.theta_deactivated) rec.branches.insert(Branch::theta_nonident);
  if (rec.weight_map.fallback_uniform) rec.branches.insert(Branch::uniform_fallback);
  if (rec.weight_map.underflow_fallback) rec.branches.insert(Branch::underflow_fallback);
  if (!rec.fit.well_posed) rec.branches.insert(Branch::ill_posed);
  return rec;
}

}  // namespace

void GimbalConfig::validate() const {
  auto bad = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (k < 1) bad("K must be >= 1");
  if (!(h > 0.0) || !std::isfinite(h)) bad("h must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma must be >= 0");
  if (!std::isfinite(u)) bad("u must be finite");
  if (!(n0 > 0.0)) bad("n0 must be positive");
  if (!(n_min > 0.0)) bad("n_min must be positive");
  if (!(eta_max >= 1.0)) bad("eta_max must be >= 1");
  if (!(eps_phi > 0.0) || !(eps_theta > 0.0) || !(eps_eta > 0.0)) bad("thresholds must be positive");
}

GimbalConfig isotropic_proxy(GimbalConfig base) {
  base.phi_mode = PhiMode::forced_zero;
  base.theta_mode = ThetaMode::off;
  base.eta_mode = EtaMode::forced_one;
  return base;
}

void Dataset::validate() const {
  if (x.size() != points.size() || y.size() != points.size()) {
    throw ConfigError("dataset: column lengths differ");
  }
  if (!ids.empty() && ids.size() != points.size()) throw ConfigError("dataset: id column length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!geo::is_valid(points[i])) {
      throw ConfigError("dataset: row " + std::to_string(i) + " has invalid lat/lon");
    }
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ConfigError("dataset: row " + std::to_string(i) + " has non-finite x or y");
    }
  }
}

std::string BranchSet::to_string() const {
  static constexpr std::pair<Branch, const char*> kNames[] = {
      {Branch::phi_iso, "phi_iso"},
      {Branch::theta_nonident, "theta_nonident"},
      {Branch::uniform_fallback, "uniform_fallback"},
      {Branch::underflow_fallback, "underflow_fallback"},
      {Branch::ill_posed, "ill_posed"},
  };
  std::string out;
  for (const auto& [b, name] : kNames) {
    if (!contains(b)) continue;
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

CovariateMoments covariate_moments(std::span<const double> x) {
  CovariateMoments m;
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(x.size()));
  return m;
}

LocalDesign build_local_design(const Dataset& data, const neighborhood::Neighborhood& nb,
                               double u) {
  const auto n = static_cast<Eigen::Index>(nb.size());
  LocalDesign d;
  d.x.resize(n, 3);
  d.y.resize(n);
  d.z.resize(nb.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto m = static_cast<std::size_t>(r);
    const std::size_t j = nb.members[m];
    d.z[m] = nb.distances[m] / u;
    d.x(r, 0) = 1.0;
    d.x(r, 1) = data.x[j];
    d.x(r, 2) = d.z[m];
    d.y(r) = data.y[j];
  }
  return d;
}

LocationRecord fit_location(const Dataset& data, const GimbalConfig& config,
                            std::size_t target_index) {
  config.validate();
  data.validate();
  if (target_index >= data.size()) throw ConfigError("fit_location: target index out of range");
  return realize(data, config, covariate_moments(data.x), data.points[target_index],
                 data.x[target_index], target_index, std::nullopt);
}

std::vector<LocationRecord> fit_all(const Dataset& data, const GimbalConfig& config,
                                    unsigned threads) {
  config.validate();
  data.validate();
  if (config.k > data.size()) {
    throw ConfigError("fit_all: K=" + std::to_string(config.k) + " exceeds N=" +
                      std::to_string(data.size()));
  }
  const CovariateMoments mom = covariate_moments(data.x);
  std::vector<LocationRecord> records(data.size());

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, data.size())));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < data.size(); i = next.fetch_add(1)) {
      records[i] = realize(data, config, mom, data.points[i], data.x[i], i, std::nullopt);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  return records;
}

Prediction predict_at(const Dataset& training, const GimbalConfig& config,
                      const geo::GeoPoint& target, double target_x) {
  config.validate();
  if (training.size() == 0) throw ConfigError("predict_at: empty training pool");
  training.validate();
  if (!geo::is_valid(target)) throw ConfigError("predict_at: invalid target lat/lon");
  if (!std::isfinite(target_x)) throw ConfigError("predict_at: non-finite target covariate");
  Prediction p;
  p.record = realize(training, config, covariate_moments(training.x), target, target_x,
                     std::nullopt, std::nullopt);
  if (p.record.fit.well_posed) p.value = p.record.fitted_at_target;
  return p;
}

double residual_knn_correct(std::span<const double> training_residuals,
                            std::span<const geo::GeoPoint> training_points,
                            const geo::GeoPoint& target, std::size_t k_resid) {
  if (training_residuals.size() != training_points.size()) {
    throw std::invalid_argument("residual_knn_correct: residual/point length mismatch");
  }
  const auto nb = neighborhood::knn(training_points, target, k_resid);
  double sum = 0.0;
  for (std::size_t j : nb.members) sum += training_residuals[j];
  return sum / static_cast<double>(nb.size());
}

std::vector<double> target_residuals(const Dataset& data, std::span<const LocationRecord> records) {
  std::vector<double> out(records.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.index && rec.fit.well_posed) out[r] = data.y[*rec.index] - rec.fitted_at_target;
  }
  return out;
}

}  // namespace gimbal
