#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gimbal/engine.hpp"
#include "gimbal/simgen.hpp"

namespace gimbal::experiments {

/// Map-level summary across target locations. Ill-posed locations are
/// excluded from every statistic and counted in `n_ill_posed`.
struct MapSummary {
  std::size_t n_targets = 0;
  std::size_t n_ill_posed = 0;
  double mu_rmse = 0, sd_rmse = 0;
  double mu_r2 = 0, sd_r2 = 0;
  double mu_kappa = 0, sd_kappa = 0, p50_kappa = 0, p95_kappa = 0, p99_kappa = 0;
  double mu_cond_wls2 = 0, sd_cond_wls2 = 0;
  double mu_neff_raw = 0, sd_neff_raw = 0;
  double mu_neff_post = 0, sd_neff_post = 0;
  double mu_eta = 0, sd_eta = 0;
  double mu_rphi = 0, sd_rphi = 0;
  double mu_gident = 0, sd_gident = 0;
  double mu_theta = 0, sd_theta = 0;
  double pr_phi_zero = 0;
  double pr_theta_zero = 0;
  double pr_uniform = 0;
  std::size_t n_uniform = 0;
};

struct WeightDiffSummary {
  std::size_t n_targets = 0;
  double mu_l1 = 0, sd_l1 = 0;
  double mu_corr = 0, sd_corr = 0;
  std::size_t n_corr_defined = 0;
};

MapSummary summarize(std::span<const LocationRecord> records);

/// Per-target l1 distance and Pearson correlation of final weight vectors.
/// Correlation is skipped when either vector is constant. Throws
/// std::invalid_argument when the two runs do not share neighborhoods.
WeightDiffSummary weight_diff(std::span<const LocationRecord> a,
                              std::span<const LocationRecord> b);

enum class ExperimentId { e71, e72, e73, e74 };

/// "7.1" / "e71" style names.
std::optional<ExperimentId> parse_experiment_id(const std::string& s);
std::string to_string(ExperimentId id);

/// Half-width of the simulated sampling region used by every experiment.
inline constexpr double kExperimentExtentM = 40000.0;

struct Variant {
  std::string name;
  GimbalConfig config;
  std::vector<LocationRecord> records;
  MapSummary summary;
};

struct NamedWeightDiff {
  std::string name;
  WeightDiffSummary summary;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentId id = ExperimentId::e71;
  std::uint64_t seed = 0;
  simgen::SimSpec sim;
  simgen::SimDataset dataset;
  std::vector<Variant> variants;
  std::vector<NamedWeightDiff> weight_diffs;
  std::vector<Verdict> verdicts;
  /// e71 only: share of full-GR records with r_phi <= 0.30, i.e. the rate a
  /// flag-only (no re-solve) strict rerun would report.
  std::optional<double> strict_phi_reflag_rate;

  bool all_passed() const;
  const Variant& variant(const std::string& name) const;
};

simgen::SimSpec experiment_sim_spec(ExperimentId id, std::uint64_t seed);
GimbalConfig experiment_base_config(ExperimentId id);
/// n0 values swept by experiment 7.3.
std::vector<double> ess_sweep();

/// Generates one shared dataset, fits every variant on it and evaluates the
/// experiment's property verdicts.
ExperimentReport run_experiment(ExperimentId id, std::uint64_t seed, unsigned threads = 0);

}  // namespace gimbal::experiments
