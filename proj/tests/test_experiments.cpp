#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gimbal/engine.hpp"
#include "gimbal/experiments.hpp"
#include "gimbal/simgen.hpp"
#include "oracles.hpp"

using namespace gimbal;
using namespace gimbal::experiments;

namespace {

Dataset sim_data(std::size_t n, std::uint64_t seed, double rho = 4.0) {
  simgen::SimSpec s;
  s.n = n;
  s.seed = seed;
  s.rho = rho;
  s.psi = 0.7;
  return simgen::generate(s).data;
}

GimbalConfig cfg(std::size_t k = 20) {
  GimbalConfig c;
  c.k = k;
  return c;
}

double direct_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("summary of one record repeated has zero spread") {
  const auto data = sim_data(80, 3);
  const auto rec = fit_location(data, cfg(), 11);
  REQUIRE(rec.well_posed());
  const std::vector<LocationRecord> same(7, rec);
  const auto s = summarize(same);
  CHECK(s.n_targets == 7);
  CHECK(s.n_ill_posed == 0);
  CHECK(s.mu_rmse == doctest::Approx(rec.fit.summary.rmse).epsilon(1e-14));
  CHECK(s.sd_rmse <= 1e-14 * rec.fit.summary.rmse);
  CHECK(s.sd_kappa <= 1e-14 * rec.fit.m_nor_condition);
  CHECK(s.sd_eta <= 1e-14 * rec.orientation().eta);
  CHECK(s.p50_kappa == rec.fit.m_nor_condition);
  CHECK(s.p99_kappa == rec.fit.m_nor_condition);
}

TEST_CASE("summary under the isotropic proxy") {
  const auto data = sim_data(150, 4);
  const auto records = fit_all(data, isotropic_proxy(cfg()), 2);
  const auto s = summarize(records);
  CHECK(s.pr_phi_zero == 1.0);
  CHECK(s.pr_theta_zero == 1.0);
  CHECK(s.mu_eta == 1.0);
  CHECK(s.sd_eta == 0.0);
  CHECK(s.mu_theta == 0.0);
}

TEST_CASE("summary probabilities and counts are consistent") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const auto data = sim_data(200, seed, 8.0);
    GimbalConfig c = cfg(15);
    c.n_min = 9.0;
    const auto records = fit_all(data, c, 2);
    const auto s = summarize(records);
    CHECK(s.n_targets + s.n_ill_posed == records.size());
    std::size_t uniform = 0, ill = 0;
    for (const auto& r : records) {
      if (!r.well_posed()) {
        ++ill;
      } else if (r.weight_map.fallback_uniform) {
        ++uniform;
      }
    }
    CHECK(s.n_ill_posed == ill);
    CHECK(s.n_uniform == uniform);
    CHECK(s.pr_uniform == doctest::Approx(static_cast<double>(uniform) / s.n_targets));
    for (double p : {s.pr_phi_zero, s.pr_theta_zero, s.pr_uniform}) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    CHECK(s.p50_kappa <= s.p95_kappa);
    CHECK(s.p95_kappa <= s.p99_kappa);
    CHECK(s.mu_eta >= 1.0);
    CHECK(s.mu_neff_post <= static_cast<double>(c.k));
  }
}

TEST_CASE("summary skips ill-posed records") {
  const auto data = sim_data(60, 8);
  auto records = fit_all(data, cfg(), 1);
  const auto before = summarize(records);
  auto broken = records.front();
  broken.fit.well_posed = false;
  broken.fit.summary.rmse = 1e9;
  records.push_back(broken);
  const auto after = summarize(records);
  CHECK(after.n_ill_posed == before.n_ill_posed + 1);
  CHECK(after.n_targets == before.n_targets);
  CHECK(after.mu_rmse == before.mu_rmse);
}

TEST_CASE("weight difference of a run with itself") {
  const auto data = sim_data(120, 9);
  const auto records = fit_all(data, cfg(), 2);
  const auto d = weight_diff(records, records);
  CHECK(d.n_targets == records.size());
  CHECK(d.mu_l1 == 0.0);
  CHECK(d.sd_l1 == 0.0);
  CHECK(d.n_corr_defined > 0);
  CHECK(d.mu_corr == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weight difference matches a direct recomputation") {
  const auto data = sim_data(150, 10, 10.0);
  const auto full = fit_all(data, cfg(), 2);
  const auto proxy = fit_all(data, isotropic_proxy(cfg()), 2);
  const auto d = weight_diff(full, proxy);

  std::vector<double> l1, corr;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& a = full[i].weight_map.weights;
    const auto& b = proxy[i].weight_map.weights;
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
    l1.push_back(s);
    const bool flat_a = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
    const bool flat_b = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
    if (!flat_a && !flat_b) corr.push_back(direct_pearson(a, b));
  }
  const double mu_l1 = std::accumulate(l1.begin(), l1.end(), 0.0) / l1.size();
  const double mu_corr = std::accumulate(corr.begin(), corr.end(), 0.0) / corr.size();
  CHECK(d.mu_l1 == doctest::Approx(mu_l1).epsilon(1e-12));
  CHECK(d.n_corr_defined == corr.size());
  CHECK(d.mu_corr == doctest::Approx(mu_corr).epsilon(1e-12));
  CHECK(d.mu_l1 > 0.0);
  CHECK(d.mu_l1 <= 2.0);
}

TEST_CASE("uniform weights are left out of the correlation") {
  const auto data = sim_data(80, 11);
  GimbalConfig c = cfg(10);
  c.n_min = 1e6;  // every location falls back to uniform
  const auto a = fit_all(data, c, 1);
  const auto b = fit_all(data, cfg(10), 1);
  const auto d = weight_diff(a, b);
  CHECK(d.n_targets == a.size());
  CHECK(d.n_corr_defined == 0);
  CHECK(d.mu_corr == 0.0);
}

TEST_CASE("weight difference rejects mismatched runs") {
  const auto data = sim_data(80, 12);
  const auto a = fit_all(data, cfg(10), 1);
  const auto b = fit_all(data, cfg(12), 1);
  CHECK_THROWS_AS(weight_diff(a, b), std::invalid_argument);
  const std::span<const LocationRecord> head(a.data(), a.size() - 1);
  CHECK_THROWS_AS(weight_diff(a, head), std::invalid_argument);
}

TEST_CASE("experiment ids") {
  CHECK(parse_experiment_id("7.1") == ExperimentId::e71);
  CHECK(parse_experiment_id("e72") == ExperimentId::e72);
  CHECK(parse_experiment_id("7.3") == ExperimentId::e73);
  CHECK(parse_experiment_id("e74") == ExperimentId::e74);
  CHECK_FALSE(parse_experiment_id("7.5").has_value());
  CHECK_FALSE(parse_experiment_id("").has_value());
  for (auto id : {ExperimentId::e71, ExperimentId::e72, ExperimentId::e73, ExperimentId::e74}) {
    CHECK(parse_experiment_id(to_string(id)) == id);
  }
}

TEST_CASE("ess sweep is strictly increasing") {
  const auto s = ess_sweep();
  REQUIRE(s.size() == 9);
  CHECK(s.front() == 6.0);
  CHECK(s.back() == 100.0);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
}

TEST_CASE("experiment 7.1 layout") {
  const auto r = run_experiment(ExperimentId::e71, 42, 0);
  REQUIRE(r.variants.size() == 4);
  CHECK(r.variants[0].name == "isotropic_proxy");
  CHECK(r.variants[3].name == "full_strict_phi");
  CHECK(r.dataset.data.size() == 1200);
  CHECK(r.variant("full").config.k == 50);
  CHECK(r.variant("full_strict_phi").config.eps_phi == 0.30);
  REQUIRE(r.strict_phi_reflag_rate.has_value());
  CHECK(*r.strict_phi_reflag_rate >= 0.0);
  CHECK(*r.strict_phi_reflag_rate <= 1.0);
  for (const auto& v : r.variants) CHECK(v.records.size() == 1200);
  CHECK_THROWS_AS(r.variant("missing"), std::out_of_range);
}

TEST_CASE("experiment 7.3 has one variant per sweep value") {
  const auto r = run_experiment(ExperimentId::e73, 42, 0);
  REQUIRE(r.variants.size() == ess_sweep().size());
  CHECK(r.variants.front().name == "n0=6");
  CHECK(r.variants.back().name == "n0=100");
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    CHECK(r.variants[i].config.n0 == ess_sweep()[i]);
  }
  CHECK_FALSE(r.strict_phi_reflag_rate.has_value());
}

TEST_CASE("a different seed gives a different dataset") {
  const auto a = experiment_sim_spec(ExperimentId::e72, 1);
  const auto b = experiment_sim_spec(ExperimentId::e72, 2);
  CHECK(simgen::generate(a).data.y != simgen::generate(b).data.y);
}
