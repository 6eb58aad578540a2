#include "gimbal/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "gimbal/stats.hpp"

namespace gimbal::experiments {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = stats::mean(a);
  const double mb = stats::mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

bool constant(const std::vector<double>& v) {
  for (double x : v) {
    if (x != v.front()) return false;
  }
  return true;
}

Variant fit_variant(const std::string& name, const GimbalConfig& cfg, const Dataset& data,
                    unsigned threads) {
  Variant v;
  v.name = name;
  v.config = cfg;
  v.records = fit_all(data, cfg, threads);
  v.summary = summarize(v.records);
  return v;
}

void add(ExperimentReport& r, std::string name, bool ok, std::string detail) {
  r.verdicts.push_back({std::move(name), ok, std::move(detail)});
}

void run_e71(ExperimentReport& r, unsigned threads) {
  const auto& data = r.dataset.data;
  const GimbalConfig base = experiment_base_config(ExperimentId::e71);
  GimbalConfig theta_off = base;
  theta_off.theta_mode = ThetaMode::off;
  GimbalConfig strict = base;
  strict.eps_phi = 0.30;

  r.variants.push_back(fit_variant("isotropic_proxy", isotropic_proxy(base), data, threads));
  r.variants.push_back(fit_variant("theta_off", theta_off, data, threads));
  r.variants.push_back(fit_variant("full", base, data, threads));
  r.variants.push_back(fit_variant("full_strict_phi", strict, data, threads));

  std::size_t reflagged = 0;
  const auto& full = r.variant("full");
  for (const auto& rec : full.records) {
    if (rec.orientation().r_phi <= 0.30) ++reflagged;
  }
  r.strict_phi_reflag_rate = static_cast<double>(reflagged) / static_cast<double>(full.records.size());

  const auto& proxy = r.variant("isotropic_proxy").summary;
  double worst_rmse = 0.0;
  double worst_kappa = 0.0;
  for (const auto& v : r.variants) {
    worst_rmse = std::max(worst_rmse, std::abs(v.summary.mu_rmse - proxy.mu_rmse));
    worst_kappa =
        std::max(worst_kappa, std::abs(v.summary.mu_kappa - proxy.mu_kappa) / proxy.mu_kappa);
  }
  add(r, "no_harm_rmse", worst_rmse < 0.01, "max |d mu(RMSE)| = " + fmt(worst_rmse) + " < 0.01");
  add(r, "no_harm_kappa", worst_kappa < 0.05,
      "max relative |d mu(kappa)| = " + fmt(worst_kappa) + " < 0.05");
  const double full_theta0 = full.summary.pr_theta_zero;
  const double proxy_theta0 = proxy.pr_theta_zero;
  add(r, "theta_branch_rates", full_theta0 == 0.0 && proxy_theta0 == 1.0,
      "Pr(theta=0): full " + fmt(full_theta0) + " (want 0), proxy " + fmt(proxy_theta0) +
          " (want 1)");
}

void run_e72(ExperimentReport& r, unsigned threads) {
  const auto& data = r.dataset.data;
  const GimbalConfig base = experiment_base_config(ExperimentId::e72);
  r.variants.push_back(fit_variant("isotropic_proxy", isotropic_proxy(base), data, threads));
  r.variants.push_back(fit_variant("full", base, data, threads));
  const auto& proxy = r.variant("isotropic_proxy");
  const auto& full = r.variant("full");
  const auto wd = weight_diff(full.records, proxy.records);
  r.weight_diffs.push_back({"full_vs_isotropic_proxy", wd});

  add(r, "proxy_eta_exact", proxy.summary.mu_eta == 1.0,
      "proxy mu(eta) = " + fmt(proxy.summary.mu_eta) + " (want exactly 1)");
  add(r, "gr_eta_activated", full.summary.mu_eta > 2.5,
      "GR mu(eta) = " + fmt(full.summary.mu_eta) + " > 2.5");
  add(r, "weight_l1_visible", wd.mu_l1 > 0.2, "mu(l1) = " + fmt(wd.mu_l1) + " > 0.2");
  add(r, "weight_corr_below", wd.mu_corr < 0.99, "mu(corr) = " + fmt(wd.mu_corr) + " < 0.99");
}

void run_e73(ExperimentReport& r, unsigned threads) {
  const auto& data = r.dataset.data;
  const GimbalConfig base = experiment_base_config(ExperimentId::e73);
  for (double n0 : ess_sweep()) {
    GimbalConfig cfg = base;
    cfg.n0 = n0;
    char name[32];
    std::snprintf(name, sizeof name, "n0=%g", n0);
    r.variants.push_back(fit_variant(name, cfg, data, threads));
  }

  bool neff_ok = true;
  bool uniform_ok = true;
  double lo = r.variants.front().summary.mu_rmse;
  double hi = lo;
  std::string neff_trace;
  std::string uniform_trace;
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const auto& s = r.variants[i].summary;
    neff_trace += (i ? " " : "") + fmt(s.mu_neff_post);
    uniform_trace += (i ? " " : "") + fmt(s.pr_uniform);
    lo = std::min(lo, s.mu_rmse);
    hi = std::max(hi, s.mu_rmse);
    if (i == 0) continue;
    const auto& prev = r.variants[i - 1].summary;
    if (s.mu_neff_post < prev.mu_neff_post) neff_ok = false;
    if (s.pr_uniform > prev.pr_uniform) uniform_ok = false;
  }
  add(r, "neff_post_nondecreasing", neff_ok, "mu(n_eff_post): " + neff_trace);
  add(r, "uniform_rate_nonincreasing", uniform_ok, "Pr(uniform): " + uniform_trace);
  add(r, "rmse_constant", hi - lo < 5e-4,
      "mu(RMSE) spread = " + fmt(hi - lo) + " < 5e-4 (constant to 3 decimals)");
}

void run_e74(ExperimentReport& r, unsigned threads) {
  const auto& data = r.dataset.data;
  const GimbalConfig base = experiment_base_config(ExperimentId::e74);
  GimbalConfig off = base;
  off.theta_mode = ThetaMode::off;
  r.variants.push_back(fit_variant("theta_off", off, data, threads));
  r.variants.push_back(fit_variant("theta_on", base, data, threads));
  const auto& on_v = r.variant("theta_on");
  const auto& off_v = r.variant("theta_off");
  const auto wd = weight_diff(on_v.records, off_v.records);
  r.weight_diffs.push_back({"theta_on_vs_theta_off", wd});

  add(r, "theta_branch_rates",
      on_v.summary.pr_theta_zero == 0.0 && off_v.summary.pr_theta_zero == 1.0,
      "Pr(theta=0): on " + fmt(on_v.summary.pr_theta_zero) + " (want 0), off " +
          fmt(off_v.summary.pr_theta_zero) + " (want 1)");
  add(r, "weight_l1_visible", wd.mu_l1 > 0.05, "mu(l1) = " + fmt(wd.mu_l1) + " > 0.05");
  const double d_rmse = std::abs(on_v.summary.mu_rmse - off_v.summary.mu_rmse);
  add(r, "rmse_unchanged", d_rmse < 0.005, "|d mu(RMSE)| = " + fmt(d_rmse) + " < 0.005");
}

}  // namespace

MapSummary summarize(std::span<const LocationRecord> records) {
  std::vector<double> rmse, r2, kappa, cw, neff_raw, neff_post, eta, rphi, gident, theta;
  MapSummary s;
  std::size_t phi0 = 0;
  std::size_t theta0 = 0;
  for (const auto& rec : records) {
    if (!rec.fit.well_posed) {
      ++s.n_ill_posed;
      continue;
    }
    const auto& o = rec.orientation();
    const auto& wm = rec.weight_map;
    rmse.push_back(rec.fit.summary.rmse);
    if (rec.fit.summary.r2_defined) r2.push_back(rec.fit.summary.r2);
    kappa.push_back(rec.fit.m_nor_condition);
    cw.push_back(rec.cond_wls2);
    neff_raw.push_back(wm.n_eff_raw);
    neff_post.push_back(wm.n_eff_post);
    eta.push_back(o.eta);
    rphi.push_back(o.r_phi);
    gident.push_back(o.g_ident);
    theta.push_back(o.theta_z);
    if (o.phi_deactivated) ++phi0;
    if (o.theta_deactivated) ++theta0;
    if (wm.fallback_uniform) ++s.n_uniform;
  }
  s.n_targets = rmse.size();
  if (s.n_targets == 0) return s;

  s.mu_rmse = stats::mean(rmse), s.sd_rmse = stats::sd(rmse);
  s.mu_r2 = stats::mean(r2), s.sd_r2 = stats::sd(r2);
  s.mu_kappa = stats::mean(kappa), s.sd_kappa = stats::sd(kappa);
  s.p50_kappa = stats::percentile(kappa, 0.50);
  s.p95_kappa = stats::percentile(kappa, 0.95);
  s.p99_kappa = stats::percentile(kappa, 0.99);
  s.mu_cond_wls2 = stats::mean(cw), s.sd_cond_wls2 = stats::sd(cw);
  s.mu_neff_raw = stats::mean(neff_raw), s.sd_neff_raw = stats::sd(neff_raw);
  s.mu_neff_post = stats::mean(neff_post), s.sd_neff_post = stats::sd(neff_post);
  s.mu_eta = stats::mean(eta), s.sd_eta = stats::sd(eta);
  s.mu_rphi = stats::mean(rphi), s.sd_rphi = stats::sd(rphi);
  s.mu_gident = stats::mean(gident), s.sd_gident = stats::sd(gident);
  s.mu_theta = stats::mean(theta), s.sd_theta = stats::sd(theta);
  const auto n = static_cast<double>(s.n_targets);
  s.pr_phi_zero = static_cast<double>(phi0) / n;
  s.pr_theta_zero = static_cast<double>(theta0) / n;
  s.pr_uniform = static_cast<double>(s.n_uniform) / n;
  return s;
}

WeightDiffSummary weight_diff(std::span<const LocationRecord> a,
                              std::span<const LocationRecord> b) {
  if (a.size() != b.size()) throw std::invalid_argument("weight_diff: target counts differ");
  std::vector<double> l1;
  std::vector<double> corr;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].neighborhood.members != b[i].neighborhood.members) {
      throw std::invalid_argument("weight_diff: neighborhoods differ at target " +
                                  std::to_string(i));
    }
    const auto& wa = a[i].weight_map.weights;
    const auto& wb = b[i].weight_map.weights;
    double d = 0.0;
    for (std::size_t j = 0; j < wa.size(); ++j) d += std::abs(wa[j] - wb[j]);
    l1.push_back(d);
    if (!constant(wa) && !constant(wb)) corr.push_back(pearson(wa, wb));
  }
  WeightDiffSummary s;
  s.n_targets = l1.size();
  s.n_corr_defined = corr.size();
  if (!l1.empty()) {
    s.mu_l1 = stats::mean(l1);
    s.sd_l1 = stats::sd(l1);
  }
  if (!corr.empty()) {
    s.mu_corr = stats::mean(corr);
    s.sd_corr = stats::sd(corr);
  }
  return s;
}

std::optional<ExperimentId> parse_experiment_id(const std::string& s) {
  if (s == "7.1" || s == "e71") return ExperimentId::e71;
  if (s == "7.2" || s == "e72") return ExperimentId::e72;
  if (s == "7.3" || s == "e73") return ExperimentId::e73;
  if (s == "7.4" || s == "e74") return ExperimentId::e74;
  return std::nullopt;
}

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::e71: return "e71";
    case ExperimentId::e72: return "e72";
    case ExperimentId::e73: return "e73";
    case ExperimentId::e74: return "e74";
  }
  return "unknown";
}

bool ExperimentReport::all_passed() const {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return true;
}

const Variant& ExperimentReport::variant(const std::string& name) const {
  for (const auto& v : variants) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("no variant named " + name);
}

simgen::SimSpec experiment_sim_spec(ExperimentId id, std::uint64_t seed) {
  simgen::SimSpec s;
  s.n = 1200;
  s.extent = kExperimentExtentM;
  s.seed = seed;
  switch (id) {
    case ExperimentId::e71:
      break;
    case ExperimentId::e72:
      s.rho = 10.0;
      s.psi = std::numbers::pi / 4.0;
      break;
    case ExperimentId::e73:
      s.sampling = simgen::Sampling::gaussian;
      s.rho = 10.0;
      s.psi = std::numbers::pi / 4.0;
      break;
    case ExperimentId::e74:
      // Undeformed geometry: the radial trend alone drives theta.
      s.c_rad = 8.0;
      s.delta_beta = 0.0;
      break;
  }
  return s;
}

GimbalConfig experiment_base_config(ExperimentId id) {
  GimbalConfig c;
  if (id == ExperimentId::e73) {
    c.k = 30;
    c.h = 2000.0;
    c.n_min = 12.0;
  } else if (id == ExperimentId::e74) {
    c.k = 30;
    c.h = 2000.0;
    c.n0 = 20.0;
    c.n_min = 4.0;
  }
  return c;
}

std::vector<double> ess_sweep() { return {6, 8, 10, 15, 20, 30, 50, 75, 100}; }

ExperimentReport run_experiment(ExperimentId id, std::uint64_t seed, unsigned threads) {
  ExperimentReport r;
  r.id = id;
  r.seed = seed;
  r.sim = experiment_sim_spec(id, seed);
  r.dataset = simgen::generate(r.sim);
  switch (id) {
    case ExperimentId::e71: run_e71(r, threads); break;
    case ExperimentId::e72: run_e72(r, threads); break;
    case ExperimentId::e73: run_e73(r, threads); break;
    case ExperimentId::e74: run_e74(r, threads); break;
  }
  return r;
}

}  // namespace gimbal::experiments
