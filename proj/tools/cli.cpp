#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "gimbal/experiments.hpp"
#include "gimbal/simgen.hpp"
#include "io.hpp"

namespace gimbal::cli {

namespace fs = std::filesystem;

namespace {

struct EstimatorFlags {
  std::string config_path;
  std::optional<std::size_t> k;
  std::optional<double> h, gamma, u, n0, n_min, eta_max, eps_phi, eps_theta, eps_eta;
  std::optional<std::string> theta_mode, phi_mode, eta_mode;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON file with estimator settings")->check(CLI::ExistingFile);
  cmd->add_option("-k,--k", f.k, "Neighbors per target (default 50)");
  cmd->add_option("--h", f.h, "Kernel bandwidth in meters (default 3000)");
  cmd->add_option("--gamma", f.gamma, "Weight modulation strength (default 1)");
  cmd->add_option("--u", f.u, "Distance-trend scale in meters (default h)");
  cmd->add_option("--n0", f.n0, "Target effective sample size (default 15)");
  cmd->add_option("--n-min", f.n_min, "Uniform-fallback ESS threshold (default 4)");
  cmd->add_option("--eta-max", f.eta_max, "Anisotropy clip (default 50)");
  cmd->add_option("--eps-phi", f.eps_phi, "Bearing isotropy threshold (default 1e-3)");
  cmd->add_option("--eps-theta", f.eps_theta, "Identifiability threshold (default 1e-8)");
  cmd->add_option("--eps-eta", f.eps_eta, "Eigenvalue floor (default 1e-8)");
  cmd->add_option("--theta-mode", f.theta_mode, "on | off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--phi-mode", f.phi_mode, "on | forced_zero")
      ->check(CLI::IsMember({"on", "forced_zero"}));
  cmd->add_option("--eta-mode", f.eta_mode, "geometry | forced_one")
      ->check(CLI::IsMember({"geometry", "forced_one"}));
  cmd->add_option("--seed", f.seed, "Recorded seed (the estimator itself is deterministic)");
  cmd->add_option("--threads", f.threads, "Worker threads, 0 = all cores")->capture_default_str();
}

GimbalConfig resolve_config(const EstimatorFlags& f) {
  GimbalConfig c;
  if (!f.config_path.empty()) c = io::read_config(f.config_path, c);
  io::Json overlay = io::Json::object();
  if (f.k) overlay["k"] = *f.k;
  if (f.h) overlay["h"] = *f.h;
  if (f.gamma) overlay["gamma"] = *f.gamma;
  if (f.u) overlay["u"] = *f.u;
  if (f.n0) overlay["n0"] = *f.n0;
  if (f.n_min) overlay["n_min"] = *f.n_min;
  if (f.eta_max) overlay["eta_max"] = *f.eta_max;
  if (f.eps_phi) overlay["eps_phi"] = *f.eps_phi;
  if (f.eps_theta) overlay["eps_theta"] = *f.eps_theta;
  if (f.eps_eta) overlay["eps_eta"] = *f.eps_eta;
  if (f.theta_mode) overlay["theta_mode"] = *f.theta_mode;
  if (f.phi_mode) overlay["phi_mode"] = *f.phi_mode;
  if (f.eta_mode) overlay["eta_mode"] = *f.eta_mode;
  if (f.seed) overlay["seed"] = *f.seed;
  c = io::config_from_json(overlay, c);
  c.validate();
  return c;
}

void require_k_fits(const GimbalConfig& c, std::size_t n, const std::string& what) {
  if (c.k > n) {
    throw io::InputError("K=" + std::to_string(c.k) + " exceeds the " + std::to_string(n) +
                         " rows of " + what);
  }
}

std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string input;
  std::string out_dir;
  io::DiagnosticOptions diag;
};

int cmd_fit(const FitArgs& a, const EstimatorFlags& f, std::ostream& out) {
  const GimbalConfig cfg = resolve_config(f);
  const Dataset data = io::read_dataset(a.input);
  require_k_fits(cfg, data.size(), a.input);

  const auto records = fit_all(data, cfg, f.threads);
  check_record_invariants(records, cfg);
  const auto extras = io::record_extras(data, records, cfg, a.diag);
  const auto summary = experiments::summarize(records);

  std::ostringstream csv;
  io::write_records(csv, data, records, extras);
  io::write_file(fs::path(a.out_dir) / "records.csv", csv.str());

  const auto n_fragile =
      static_cast<std::size_t>(std::count(extras.fragile.begin(), extras.fragile.end(), true));
  const double floor = a.diag.neff_floor >= 0.0 ? a.diag.neff_floor : cfg.n_min;
  io::Json j;
  j["schema"] = io::kSummarySchema;
  j["n_rows"] = data.size();
  j["config"] = io::to_json(cfg);
  j["diagnostics"] = io::Json{{"kappa_quantile", a.diag.kappa_quantile},
                              {"neff_floor", floor},
                              {"k_moran", a.diag.k_moran},
                              {"moran_zero_variance", extras.moran_zero_variance},
                              {"n_fragile", n_fragile}};
  j["summary"] = io::to_json(summary);
  io::write_file(fs::path(a.out_dir) / "summary.json", dump(j));

  out << "fit: " << data.size() << " locations, " << summary.n_ill_posed << " ill-posed, "
      << n_fragile << " fragile -> " << a.out_dir << "\n";
  return kOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string train;
  std::string test;
  std::string out;
  std::string summary;
  std::size_t residual_knn = 0;
};

int cmd_predict(const PredictArgs& a, const EstimatorFlags& f, std::ostream& out) {
  const GimbalConfig cfg = resolve_config(f);
  const Dataset train = io::read_dataset(a.train);
  const Dataset test = io::read_dataset(a.test, /*require_y=*/false);
  require_k_fits(cfg, train.size(), a.train);

  const bool correct = a.residual_knn > 0;
  std::vector<double> pool_res;
  std::vector<geo::GeoPoint> pool_pts;
  if (correct) {
    const auto records = fit_all(train, cfg, f.threads);
    const auto res = target_residuals(train, records);
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (std::isnan(res[i])) continue;
      pool_res.push_back(res[i]);
      pool_pts.push_back(train.points[i]);
    }
    if (a.residual_knn > pool_res.size()) {
      throw io::InputError("--residual-knn " + std::to_string(a.residual_knn) + " exceeds the " +
                           std::to_string(pool_res.size()) + " usable training residuals");
    }
  }

  std::ostringstream csv;
  csv << "# schema: " << io::kPredictionsSchema << '\n';
  csv << "index,id,lat,lon,x,y,prediction";
  if (correct) csv << ",residual_correction,prediction_corrected";
  csv << ",well_posed,branches,beta0,beta1,beta2,kappa,h_eff,eta,n_eff_post,fallback_uniform\n";

  std::size_t n_pred = 0, n_scored = 0;
  double sse = 0.0, sse_corr = 0.0;
  for (std::size_t t = 0; t < test.size(); ++t) {
    const auto p = predict_at(train, cfg, test.points[t], test.x[t]);
    const auto& fit = p.record.fit;
    const double pred = p.value.value_or(std::nan(""));
    double corr = std::nan("");
    if (correct && p.value) corr = residual_knn_correct(pool_res, pool_pts, test.points[t], a.residual_knn);
    const double pred_corr = pred + corr;
    auto beta = [&](int c) { return fit.well_posed ? io::format_number(fit.beta[c]) : std::string{}; };

    csv << t << ',' << (test.ids.empty() ? std::string{} : test.ids[t]) << ','
        << io::format_number(test.points[t].lat) << ',' << io::format_number(test.points[t].lon)
        << ',' << io::format_number(test.x[t]) << ',' << io::format_number(test.y[t]) << ','
        << io::format_number(pred);
    if (correct) csv << ',' << io::format_number(corr) << ',' << io::format_number(pred_corr);
    csv << ',' << (fit.well_posed ? 1 : 0) << ',' << p.record.branches.to_string() << ',' << beta(0)
        << ',' << beta(1) << ',' << beta(2) << ',' << io::format_number(fit.m_nor_condition) << ','
        << io::format_number(p.record.weight_map.h_eff) << ','
        << io::format_number(p.record.orientation().eta) << ','
        << io::format_number(p.record.weight_map.n_eff_post) << ','
        << (p.record.weight_map.fallback_uniform ? 1 : 0) << '\n';

    if (!p.value) continue;
    ++n_pred;
    if (std::isnan(test.y[t])) continue;
    ++n_scored;
    sse += (test.y[t] - pred) * (test.y[t] - pred);
    if (correct) sse_corr += (test.y[t] - pred_corr) * (test.y[t] - pred_corr);
  }
  io::write_file(a.out, csv.str());

  const double rmse = n_scored ? std::sqrt(sse / static_cast<double>(n_scored)) : std::nan("");
  if (!a.summary.empty()) {
    io::Json j;
    j["schema"] = io::kPredictSummarySchema;
    j["n_train"] = train.size();
    j["n_test"] = test.size();
    j["n_predicted"] = n_pred;
    j["n_ill_posed"] = test.size() - n_pred;
    j["n_scored"] = n_scored;
    j["rmse"] = rmse;
    if (correct) {
      j["residual_knn"] = a.residual_knn;
      j["rmse_corrected"] = n_scored ? std::sqrt(sse_corr / static_cast<double>(n_scored)) : std::nan("");
    }
    j["config"] = io::to_json(cfg);
    io::write_file(a.summary, dump(j));
  }
  out << "predict: " << n_pred << "/" << test.size() << " predicted";
  if (n_scored) out << ", rmse " << io::format_number(rmse);
  out << " -> " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  simgen::SimSpec spec;
  std::string sampling = "uniform";
  std::string out;
  double test_fraction = 0.0;
  std::string train_out;
  std::string test_out;
};

Dataset subset(const Dataset& d, const std::vector<bool>& take, bool value,
               const std::vector<double>& beta1, std::vector<double>& beta_out) {
  Dataset s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (take[i] != value) continue;
    s.points.push_back(d.points[i]);
    s.x.push_back(d.x[i]);
    s.y.push_back(d.y[i]);
    beta_out.push_back(beta1[i]);
  }
  return s;
}

int cmd_simulate(SimulateArgs a, std::ostream& out) {
  a.spec.sampling = a.sampling == "gaussian" ? simgen::Sampling::gaussian : simgen::Sampling::uniform;
  a.spec.validate();
  const auto sim = simgen::generate(a.spec);

  if (a.test_fraction > 0.0) {
    if (a.train_out.empty() || a.test_out.empty()) {
      throw io::InputError("--test-fraction needs both --train-out and --test-out");
    }
    const auto is_test = simgen::holdout_split(sim.data.size(), a.test_fraction, a.spec.seed);
    std::vector<double> b_train, b_test;
    const Dataset train = subset(sim.data, is_test, false, sim.beta1, b_train);
    const Dataset test = subset(sim.data, is_test, true, sim.beta1, b_test);
    std::ostringstream s1, s2;
    io::write_dataset(s1, train, b_train);
    io::write_dataset(s2, test, b_test);
    io::write_file(a.train_out, s1.str());
    io::write_file(a.test_out, s2.str());
    out << "simulate: " << train.size() << " train / " << test.size() << " test rows\n";
    return kOk;
  }
  if (a.out.empty()) throw io::InputError("simulate needs --out (or --test-fraction with split outputs)");
  std::ostringstream s;
  io::write_dataset(s, sim.data, sim.beta1);
  io::write_file(a.out, s.str());
  out << "simulate: " << sim.data.size() << " rows -> " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string id;
  std::uint64_t seed = 42;
  std::string out_dir;
  unsigned threads = 0;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  const auto id = experiments::parse_experiment_id(a.id);
  if (!id) throw io::InputError("unknown experiment id '" + a.id + "' (expected 7.1, 7.2, 7.3 or 7.4)");
  const auto report = experiments::run_experiment(*id, a.seed, a.threads);
  const fs::path dir(a.out_dir);

  std::ostringstream ds;
  io::write_dataset(ds, report.dataset.data, report.dataset.beta1);
  io::write_file(dir / "dataset.csv", ds.str());

  io::Json files = io::Json::array({"dataset.csv"});
  for (const auto& v : report.variants) {
    check_record_invariants(v.records, v.config);
    const auto extras = io::record_extras(report.dataset.data, v.records, v.config, {});
    std::ostringstream csv;
    io::write_records(csv, report.dataset.data, v.records, extras);
    const std::string name = "variant_" + variant_file_stem(v.name) + ".csv";
    io::write_file(dir / name, csv.str());
    files.push_back(name);
  }
  io::Json j = io::to_json(report);
  j["files"] = files;
  io::write_file(dir / "report.json", dump(j));

  std::size_t passed = 0;
  for (const auto& v : report.verdicts) {
    out << (v.passed ? "[PASS] " : "[FAIL] ") << v.name << ": " << v.detail << "\n";
    passed += v.passed ? 1 : 0;
  }
  out << "experiment " << experiments::to_string(*id) << ": " << passed << "/" << report.verdicts.size()
      << " verdicts passed -> " << a.out_dir << "\n";
  return kOk;
}

}  // namespace

std::string variant_file_stem(const std::string& name) {
  std::string s;
  for (char ch : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    s += keep ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch))) : '_';
  }
  return s;
}

void check_record_invariants(std::span<const LocationRecord> records, const GimbalConfig& config) {
  for (const auto& rec : records) {
    const auto at = "location " + std::to_string(rec.index.value_or(0)) + ": ";
    const auto& w = rec.weight_map.weights;
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0)) throw std::logic_error(at + "negative or NaN weight");
      sum += v;
    }
    if (w.size() != rec.neighborhood.size() || std::abs(sum - 1.0) > 1e-9) {
      throw std::logic_error(at + "weights are not a distribution over the neighborhood");
    }
    const auto& o = rec.orientation();
    if (!(o.eta >= 1.0 && o.eta <= config.eta_max)) throw std::logic_error(at + "eta outside [1, eta_max]");
    if (!(o.r_phi >= 0.0 && o.r_phi <= 1.0 + 1e-12)) throw std::logic_error(at + "r_phi outside [0, 1]");
    if (rec.fit.well_posed != !rec.branches.contains(Branch::ill_posed)) {
      throw std::logic_error(at + "ill_posed branch disagrees with the fit");
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gimbal Regression: geometry-aware local regression with numerical diagnostics", "gimbal"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  EstimatorFlags est;

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit every location of a dataset");
  fit->add_option("-i,--input", fit_args.input, "Dataset CSV (lat, lon, x, y[, id])")->required();
  fit->add_option("-o,--out-dir", fit_args.out_dir, "Directory for records.csv and summary.json")->required();
  fit->add_option("--kappa-quantile", fit_args.diag.kappa_quantile, "Reliability mask kappa quantile")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  fit->add_option("--neff-floor", fit_args.diag.neff_floor, "Reliability mask ESS floor (default n_min)");
  fit->add_option("--k-moran", fit_args.diag.k_moran, "Neighbors in the local Moran adjacency")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_estimator_flags(fit, est);

  PredictArgs pred_args;
  auto* predict = app.add_subcommand("predict", "Predict at held-out locations from a training pool");
  predict->add_option("--train", pred_args.train, "Training CSV (lat, lon, x, y)")->required();
  predict->add_option("--test", pred_args.test, "Test CSV (lat, lon, x[, y])")->required();
  predict->add_option("-o,--out", pred_args.out, "Output predictions CSV")->required();
  predict->add_option("--summary", pred_args.summary, "Optional JSON summary path");
  predict->add_option("--residual-knn", pred_args.residual_knn,
                      "Add the mean of the k nearest training residuals (0 = off)");
  add_estimator_flags(predict, est);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded synthetic dataset");
  auto& s = sim_args.spec;
  simulate->add_option("-o,--out", sim_args.out, "Output dataset CSV");
  simulate->add_option("--n", s.n, "Number of locations")->capture_default_str();
  simulate->add_option("--lat0", s.lat0, "Reference latitude")->capture_default_str();
  simulate->add_option("--lon0", s.lon0, "Reference longitude")->capture_default_str();
  simulate->add_option("--extent", s.extent, "Sampling half-width in meters")->capture_default_str();
  simulate->add_option("--sampling", sim_args.sampling, "uniform | gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}))
      ->capture_default_str();
  simulate->add_option("--rho", s.rho, "Stretch ratio (>= 1)")->capture_default_str();
  simulate->add_option("--psi", s.psi, "Stretch orientation in radians")->capture_default_str();
  simulate->add_option("--delta-beta", s.delta_beta, "Coefficient surface amplitude")->capture_default_str();
  simulate->add_option("--sigma", s.sigma, "Noise standard deviation")->capture_default_str();
  simulate->add_option("--c-rad", s.c_rad, "Radial trend strength")->capture_default_str();
  simulate->add_option("--seed", s.seed, "Seed")->capture_default_str();
  simulate->add_option("--test-fraction", sim_args.test_fraction, "Hold-out share written to --test-out")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--train-out", sim_args.train_out, "Training split CSV");
  simulate->add_option("--test-out", sim_args.test_out, "Test split CSV");

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand("experiment", "Run one of the mechanism experiments 7.1-7.4");
  experiment->add_option("--id", exp_args.id, "7.1 | 7.2 | 7.3 | 7.4")->required();
  experiment->add_option("--seed", exp_args.seed, "Dataset seed")->capture_default_str();
  experiment->add_option("-o,--out-dir", exp_args.out_dir, "Output directory")->required();
  experiment->add_option("--threads", exp_args.threads, "Worker threads, 0 = all cores")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit) return cmd_fit(fit_args, est, out);
    if (*predict) return cmd_predict(pred_args, est, out);
    if (*simulate) return cmd_simulate(sim_args, out);
    if (*experiment) return cmd_experiment(exp_args, out);
  } catch (const io::InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace gimbal::cli
