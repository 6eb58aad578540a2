#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "gimbal/diagnostics.hpp"

namespace gimbal::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool skip_line(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

std::string where(const std::string& source, std::size_t row, std::size_t line) {
  return source + ": row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

double parse_number(const std::string& text, const std::string& column, const std::string& at) {
  if (text.empty()) throw InputError(at + ": empty value in column '" + column + "'");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw InputError(at + ": column '" + column + "' is not a finite number: '" + text + "'");
  }
  return v;
}

const char* to_string(ThetaMode m) { return m == ThetaMode::on ? "on" : "off"; }
const char* to_string(PhiMode m) { return m == PhiMode::on ? "on" : "forced_zero"; }
const char* to_string(EtaMode m) { return m == EtaMode::geometry ? "geometry" : "forced_one"; }
const char* to_string(simgen::Sampling s) {
  return s == simgen::Sampling::uniform ? "uniform" : "gaussian";
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& source, bool require_y) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw InputError(source + ": no header row");

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
  std::vector<std::string> required = {"lat", "lon", "x"};
  if (require_y) required.push_back("y");
  for (const auto& name : required) {
    if (!col.contains(name)) throw InputError(source + ": missing required column '" + name + "'");
  }
  const bool has_y = col.contains("y");
  const bool has_id = col.contains("id");

  Dataset data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    ++row;
    const std::string at = where(source, row, line_no);
    const auto fields = split_fields(line);
    auto field = [&](const std::string& name) -> const std::string& {
      const std::size_t idx = col.at(name);
      if (idx >= fields.size()) throw InputError(at + ": missing value for column '" + name + "'");
      return fields[idx];
    };
    const double lat = parse_number(field("lat"), "lat", at);
    const double lon = parse_number(field("lon"), "lon", at);
    if (lat < -90.0 || lat > 90.0) {
      throw InputError(at + ": lat " + field("lat") + " outside [-90, 90]");
    }
    if (lon < -180.0 || lon > 180.0) {
      throw InputError(at + ": lon " + field("lon") + " outside [-180, 180]");
    }
    data.points.push_back({lat, lon});
    data.x.push_back(parse_number(field("x"), "x", at));
    data.y.push_back(has_y ? parse_number(field("y"), "y", at) : kNaN);
    if (has_id) data.ids.push_back(field("id"));
  }
  if (row == 0) throw InputError(source + ": no data rows");
  return data;
}

Dataset read_dataset(const std::filesystem::path& path, bool require_y) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open file");
  return parse_dataset(in, path.string(), require_y);
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset(std::ostream& out, const Dataset& data, std::span<const double> beta1) {
  const bool with_ids = !data.ids.empty();
  const bool with_beta = !beta1.empty();
  out << "# schema: " << kDatasetSchema << '\n';
  std::vector<std::string> header;
  if (with_ids) header.push_back("id");
  header.insert(header.end(), {"lat", "lon", "x", "y"});
  if (with_beta) header.push_back("beta1_true");
  out << csv_join(header) << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> f;
    if (with_ids) f.push_back(data.ids[i]);
    f.push_back(format_number(data.points[i].lat));
    f.push_back(format_number(data.points[i].lon));
    f.push_back(format_number(data.x[i]));
    f.push_back(format_number(data.y[i]));
    if (with_beta) f.push_back(format_number(beta1[i]));
    out << csv_join(f) << '\n';
  }
}

RecordExtras record_extras(const Dataset& data, std::span<const LocationRecord> records,
                           const GimbalConfig& config, const DiagnosticOptions& options) {
  RecordExtras ex;
  ex.residual = target_residuals(data, records);
  ex.local_moran.assign(records.size(), kNaN);

  std::vector<double> res;
  std::vector<geo::GeoPoint> pts;
  std::vector<std::size_t> where_from;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (std::isnan(ex.residual[r])) continue;
    res.push_back(ex.residual[r]);
    pts.push_back(records[r].location);
    where_from.push_back(r);
  }
  if (res.size() > options.k_moran) {
    const auto moran =
        diagnostics::local_moran(res, pts, diagnostics::AdjacencySpec{options.k_moran});
    ex.moran_zero_variance = moran.zero_variance;
    for (std::size_t i = 0; i < where_from.size(); ++i) ex.local_moran[where_from[i]] = moran.values[i];
  }

  const double floor = options.neff_floor >= 0.0 ? options.neff_floor : config.n_min;
  ex.fragile = diagnostics::reliability_mask(records, options.kappa_quantile, floor);
  return ex;
}

std::vector<std::string> records_header() {
  return {"index",        "id",           "lat",         "lon",          "x",
          "y",            "well_posed",   "branches",    "beta0",        "beta1",
          "beta2",        "fitted",       "residual",    "rmse",         "r2",
          "r2_defined",   "kappa",        "cond_wls2",   "stability_bound",
          "lambda_min",   "lambda_max",   "h",           "h_eff",        "phi",
          "r_phi",        "theta_z",      "g_ident",     "eta",          "s_lambda_max",
          "s_lambda_min", "n_i",          "n_eff_raw",   "n_eff_post",   "n_eff_final",
          "fallback_uniform", "underflow_fallback", "local_moran", "fragile"};
}

void write_records(std::ostream& out, const Dataset& data, std::span<const LocationRecord> records,
                   const RecordExtras& extras) {
  out << "# schema: " << kRecordsSchema << '\n';
  out << csv_join(records_header()) << '\n';
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto& o = rec.orientation();
    const auto& wm = rec.weight_map;
    const auto& fit = rec.fit;
    const std::size_t i = rec.index.value_or(r);
    auto beta = [&](int c) { return fit.well_posed ? format_number(fit.beta[c]) : std::string{}; };
    std::vector<std::string> f = {
        std::to_string(i),
        data.ids.empty() ? std::string{} : data.ids[i],
        format_number(rec.location.lat),
        format_number(rec.location.lon),
        format_number(rec.target_x),
        format_number(data.y[i]),
        flag(fit.well_posed),
        rec.branches.to_string(),
        beta(0),
        beta(1),
        beta(2),
        format_number(rec.fitted_at_target),
        format_number(extras.residual[r]),
        format_number(fit.summary.rmse),
        format_number(fit.summary.r2),
        flag(fit.summary.r2_defined),
        format_number(fit.m_nor_condition),
        format_number(rec.cond_wls2),
        format_number(fit.operator_norm_bound),
        format_number(fit.lambda_min),
        format_number(fit.lambda_max),
        format_number(wm.h_nominal),
        format_number(wm.h_eff),
        format_number(o.phi),
        format_number(o.r_phi),
        format_number(o.theta_z),
        format_number(o.g_ident),
        format_number(o.eta),
        format_number(o.s_lambda_max),
        format_number(o.s_lambda_min),
        std::to_string(rec.neighborhood.size()),
        format_number(wm.n_eff_raw),
        format_number(wm.n_eff_post),
        format_number(wm.n_eff_final),
        flag(wm.fallback_uniform),
        flag(wm.underflow_fallback),
        format_number(extras.local_moran[r]),
        flag(extras.fragile[r]),
    };
    out << csv_join(f) << '\n';
  }
}

Json to_json(const GimbalConfig& c) {
  return Json{{"k", c.k},
              {"h", c.h},
              {"gamma", c.gamma},
              {"u", c.distance_scale()},
              {"n0", c.n0},
              {"n_min", c.n_min},
              {"eta_max", c.eta_max},
              {"eps_phi", c.eps_phi},
              {"eps_theta", c.eps_theta},
              {"eps_eta", c.eps_eta},
              {"theta_mode", to_string(c.theta_mode)},
              {"phi_mode", to_string(c.phi_mode)},
              {"eta_mode", to_string(c.eta_mode)},
              {"seed", c.seed}};
}

Json to_json(const simgen::SimSpec& s) {
  return Json{{"n", s.n},
              {"lat0", s.lat0},
              {"lon0", s.lon0},
              {"extent", s.extent},
              {"sampling", to_string(s.sampling)},
              {"rho", s.rho},
              {"psi", s.psi},
              {"delta_beta", s.delta_beta},
              {"sigma", s.sigma},
              {"c_rad", s.c_rad},
              {"seed", s.seed}};
}

Json to_json(const experiments::MapSummary& s) {
  return Json{{"n_targets", s.n_targets},
              {"n_ill_posed", s.n_ill_posed},
              {"mu_rmse", s.mu_rmse},
              {"sd_rmse", s.sd_rmse},
              {"mu_r2", s.mu_r2},
              {"sd_r2", s.sd_r2},
              {"mu_kappa", s.mu_kappa},
              {"sd_kappa", s.sd_kappa},
              {"p50_kappa", s.p50_kappa},
              {"p95_kappa", s.p95_kappa},
              {"p99_kappa", s.p99_kappa},
              {"mu_cond_wls2", s.mu_cond_wls2},
              {"sd_cond_wls2", s.sd_cond_wls2},
              {"mu_neff_raw", s.mu_neff_raw},
              {"sd_neff_raw", s.sd_neff_raw},
              {"mu_neff_post", s.mu_neff_post},
              {"sd_neff_post", s.sd_neff_post},
              {"mu_eta", s.mu_eta},
              {"sd_eta", s.sd_eta},
              {"mu_rphi", s.mu_rphi},
              {"sd_rphi", s.sd_rphi},
              {"mu_gident", s.mu_gident},
              {"sd_gident", s.sd_gident},
              {"mu_theta", s.mu_theta},
              {"sd_theta", s.sd_theta},
              {"pr_phi_zero", s.pr_phi_zero},
              {"pr_theta_zero", s.pr_theta_zero},
              {"pr_uniform", s.pr_uniform},
              {"n_uniform", s.n_uniform}};
}

Json to_json(const experiments::WeightDiffSummary& s) {
  return Json{{"n_targets", s.n_targets}, {"mu_l1", s.mu_l1},   {"sd_l1", s.sd_l1},
              {"mu_corr", s.mu_corr},     {"sd_corr", s.sd_corr}, {"n_corr_defined", s.n_corr_defined}};
}

Json to_json(const experiments::ExperimentReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["experiment"] = experiments::to_string(r.id);
  j["seed"] = r.seed;
  j["simulation"] = to_json(r.sim);
  Json variants = Json::array();
  for (const auto& v : r.variants) {
    variants.push_back(Json{{"name", v.name}, {"config", to_json(v.config)}, {"summary", to_json(v.summary)}});
  }
  j["variants"] = variants;
  Json diffs = Json::array();
  for (const auto& d : r.weight_diffs) diffs.push_back(Json{{"name", d.name}, {"summary", to_json(d.summary)}});
  j["weight_diffs"] = diffs;
  if (r.strict_phi_reflag_rate) j["strict_phi_reflag_rate"] = *r.strict_phi_reflag_rate;
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back(Json{{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  }
  j["verdicts"] = verdicts;
  j["all_passed"] = r.all_passed();
  return j;
}

GimbalConfig config_from_json(const Json& j, GimbalConfig c) {
  if (!j.is_object()) throw InputError("config: top level must be a JSON object");
  auto num = [](const Json& v, const std::string& key) {
    if (!v.is_number()) throw InputError("config: '" + key + "' must be a number");
    return v.get<double>();
  };
  auto count = [](const Json& v, const std::string& key) -> std::uint64_t {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw InputError("config: '" + key + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  };
  auto str = [](const Json& v, const std::string& key) {
    if (!v.is_string()) throw InputError("config: '" + key + "' must be a string");
    return v.get<std::string>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "k") c.k = count(v, key);
    else if (key == "h") c.h = num(v, key);
    else if (key == "gamma") c.gamma = num(v, key);
    else if (key == "u") c.u = num(v, key);
    else if (key == "n0") c.n0 = num(v, key);
    else if (key == "n_min") c.n_min = num(v, key);
    else if (key == "eta_max") c.eta_max = num(v, key);
    else if (key == "eps_phi") c.eps_phi = num(v, key);
    else if (key == "eps_theta") c.eps_theta = num(v, key);
    else if (key == "eps_eta") c.eps_eta = num(v, key);
    else if (key == "seed") c.seed = count(v, key);
    else if (key == "theta_mode") {
      const auto s = str(v, key);
      if (s == "on") c.theta_mode = ThetaMode::on;
      else if (s == "off") c.theta_mode = ThetaMode::off;
      else throw InputError("config: theta_mode must be 'on' or 'off'");
    } else if (key == "phi_mode") {
      const auto s = str(v, key);
      if (s == "on") c.phi_mode = PhiMode::on;
      else if (s == "forced_zero") c.phi_mode = PhiMode::forced_zero;
      else throw InputError("config: phi_mode must be 'on' or 'forced_zero'");
    } else if (key == "eta_mode") {
      const auto s = str(v, key);
      if (s == "geometry") c.eta_mode = EtaMode::geometry;
      else if (s == "forced_one") c.eta_mode = EtaMode::forced_one;
      else throw InputError("config: eta_mode must be 'geometry' or 'forced_one'");
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  return c;
}

GimbalConfig read_config(const std::filesystem::path& path, GimbalConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config file");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return config_from_json(j, base);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw InputError(path.string() + ": write failed");
}

}  // namespace gimbal::io
