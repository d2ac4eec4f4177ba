#include "lamegap/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "lamegap/errors.hpp"

namespace lamegap {

using nlohmann::json;

GapProfile GeometryConfig::profile() const {
  return build_gap_profile(m, sigma, variant, kappa, patch_radius, amplitude, n);
}

DomainSpec GeometryConfig::domain(double eps_value) const {
  return {n, outer_radius, inclusion_radius, eps_value};
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument(std::string(section) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw InvalidArgument("unknown key '" + key + "' in " + section);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

Locus parse_locus(const std::string& s) {
  if (s == "shortest_line") return Locus::ShortestLine;
  if (s == "cylinder_surface") return Locus::CylinderSurface;
  throw InvalidArgument("unknown locus '" + s + "'");
}

Rational parse_rational(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (!j.is_string()) throw InvalidArgument("exponent must be an integer or a \"p/q\" string");
  const std::string s = j.get<std::string>();
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stol(s));
    return Rational(std::stol(s.substr(0, slash)), std::stol(s.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw InvalidArgument("malformed exponent '" + s + "'");
  }
}

void parse_geometry(const json& g, GeometryConfig& geo) {
  check_keys(g, "geometry",
             {"n", "m", "sigma", "variant", "kappa", "amplitude", "R", "R_D", "r_1", "eps",
              "grading"});
  read(g, "n", geo.n);
  read(g, "m", geo.m);
  if (g.contains("sigma")) {
    const json& s = g.at("sigma");
    check_keys(s, "geometry.sigma", {"type", "r"});
    const std::string type = s.value("type", "point");
    if (type == "point") {
      geo.sigma = ContactSet::point();
    } else if (type == "disk") {
      if (!s.contains("r")) throw InvalidArgument("disk contact set needs r");
      geo.sigma = ContactSet::disk(s.at("r").get<double>());
    } else {
      throw InvalidArgument("unknown contact set type '" + type + "'");
    }
  }
  if (g.contains("variant")) {
    const std::string v = g.at("variant").get<std::string>();
    if (v == "pure_power") {
      geo.variant = ProfileVariant::PurePower;
    } else if (v == "tilted") {
      geo.variant = ProfileVariant::Tilted;
    } else {
      throw InvalidArgument("unknown profile variant '" + v + "'");
    }
  }
  if (g.contains("kappa") && !g.at("kappa").is_null()) {
    const auto k = g.at("kappa").get<std::vector<double>>();
    if (k.size() != 4) throw InvalidArgument("kappa needs four entries");
    geo.kappa = HConstants{k[0], k[1], k[2], k[3]};
  }
  read(g, "amplitude", geo.amplitude);
  read(g, "R", geo.patch_radius);
  read(g, "R_D", geo.outer_radius);
  read(g, "r_1", geo.inclusion_radius);
  read(g, "eps", geo.eps);
  if (g.contains("grading")) {
    const json& gr = g.at("grading");
    check_keys(gr, "geometry.grading", {"q_v", "g_h", "bulk_size", "eps_floor", "max_vertices"});
    read(gr, "q_v", geo.grading.q_v);
    read(gr, "g_h", geo.grading.g_h);
    read(gr, "bulk_size", geo.grading.bulk_size);
    read(gr, "eps_floor", geo.grading.eps_floor);
    if (gr.contains("max_vertices")) {
      geo.grading.max_vertices = static_cast<std::size_t>(gr.at("max_vertices").get<double>());
    }
  }
}

void parse_solver(const json& s, SolverOptions& opt) {
  check_keys(s, "solver", {"p", "quad_degree", "linear_solver", "tol"});
  read(s, "p", opt.order);
  read(s, "quad_degree", opt.quad_degree);
  read(s, "tol", opt.tol);
  if (s.contains("linear_solver")) {
    const std::string ls = s.at("linear_solver").get<std::string>();
    if (ls == "direct") {
      opt.linear_solver = LinearSolverKind::Direct;
    } else if (ls == "cg") {
      opt.linear_solver = LinearSolverKind::ConjugateGradient;
    } else {
      throw InvalidArgument("unknown linear solver '" + ls + "'");
    }
  }
}

void parse_data(const json& d, BoundaryData& data) {
  check_keys(d, "data", {"preset", "k", "eta", "parity", "alpha", "radius"});
  if (d.contains("preset")) data.preset = parse_preset(d.at("preset").get<std::string>());
  read(d, "k", data.k);
  read(d, "eta", data.eta);
  read(d, "alpha", data.alpha);
  read(d, "radius", data.contact_radius);
  if (d.contains("parity")) data.custom_parity = parse_parity(d.at("parity").get<std::string>());
}

void parse_fit(const json& f, FitConfig& fit) {
  check_keys(f, "fit", {"mode", "spread_factor", "exponent_tol", "locus", "rate"});
  if (f.contains("mode")) {
    const std::string mode = f.at("mode").get<std::string>();
    if (mode == "rate_ratio") {
      fit.mode = FitMode::RateRatio;
    } else if (mode == "power_fit") {
      fit.mode = FitMode::PowerFit;
    } else {
      throw InvalidArgument("unknown fit mode '" + mode + "'");
    }
  }
  read(f, "spread_factor", fit.spread_factor);
  read(f, "exponent_tol", fit.exponent_tol);
  if (f.contains("locus")) fit.locus = parse_locus(f.at("locus").get<std::string>());
  if (f.contains("rate")) {
    const json& r = f.at("rate");
    check_keys(r, "fit.rate", {"exponent", "log_power", "coefficient"});
    fit.predicted = RateFunction(parse_rational(r.value("exponent", json(0))),
                                 r.value("log_power", 0), r.value("coefficient", 1.0));
  }
}

const char* variant_name(ProfileVariant v) {
  return v == ProfileVariant::PurePower ? "pure_power" : "tilted";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    check_keys(root, "config",
               {"name", "geometry", "solver", "material", "data", "eps_list", "slow_eps", "probes",
                "probe_count", "fit"});
    read(root, "name", c.name);
    if (root.contains("geometry")) parse_geometry(root.at("geometry"), c.geometry);
    if (root.contains("solver")) parse_solver(root.at("solver"), c.solver);
    if (root.contains("material")) {
      const json& mat = root.at("material");
      check_keys(mat, "material", {"lambda", "mu"});
      read(mat, "lambda", c.material.lambda);
      read(mat, "mu", c.material.mu);
    }
    if (root.contains("data")) parse_data(root.at("data"), c.data);
    read(root, "eps_list", c.eps_list);
    read(root, "slow_eps", c.slow_eps);
    if (root.contains("probes")) {
      c.probes.clear();
      for (const auto& p : root.at("probes")) c.probes.push_back(parse_locus(p.get<std::string>()));
    }
    read(root, "probe_count", c.probe_count);
    if (root.contains("fit")) parse_fit(root.at("fit"), c.fit);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config has a value of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  auto& g = j["geometry"];
  g["n"] = geometry.n;
  g["m"] = geometry.m;
  if (geometry.sigma.is_point()) {
    g["sigma"] = {{"type", "point"}};
  } else {
    g["sigma"] = {{"type", "disk"}, {"r", geometry.sigma.radius}};
  }
  g["variant"] = variant_name(geometry.variant);
  if (geometry.kappa) {
    g["kappa"] = {geometry.kappa->kappa1, geometry.kappa->kappa2, geometry.kappa->kappa3,
                  geometry.kappa->kappa4};
  } else {
    g["kappa"] = nullptr;
  }
  g["amplitude"] = geometry.amplitude;
  g["R"] = geometry.patch_radius;
  g["R_D"] = geometry.outer_radius;
  g["r_1"] = geometry.inclusion_radius;
  g["eps"] = geometry.eps;
  g["grading"] = {{"q_v", geometry.grading.q_v},
                  {"g_h", geometry.grading.g_h},
                  {"bulk_size", geometry.grading.bulk_size},
                  {"eps_floor", geometry.grading.eps_floor},
                  {"max_vertices", geometry.grading.max_vertices}};
  j["solver"] = {{"p", solver.order},
                 {"quad_degree", solver.quad_degree},
                 {"linear_solver", solver.linear_solver == LinearSolverKind::Direct ? "direct" : "cg"},
                 {"tol", solver.tol}};
  j["material"] = {{"lambda", material.lambda}, {"mu", material.mu}};
  j["data"] = {{"preset", to_string(data.preset)},
               {"k", data.k},
               {"eta", data.eta},
               {"parity", to_string(data.custom_parity)},
               {"alpha", data.alpha},
               {"radius", data.contact_radius}};
  j["eps_list"] = eps_list;
  j["slow_eps"] = slow_eps;
  std::vector<std::string> probe_names;
  for (Locus l : probes) probe_names.push_back(to_string(l));
  j["probes"] = probe_names;
  j["probe_count"] = probe_count;
  auto& f = j["fit"];
  f["mode"] = fit.mode == FitMode::RateRatio ? "rate_ratio" : "power_fit";
  f["spread_factor"] = fit.spread_factor;
  f["exponent_tol"] = fit.exponent_tol;
  if (fit.locus) f["locus"] = to_string(*fit.locus);
  if (fit.predicted) {
    f["rate"] = {{"exponent", fit.predicted->exponent().str()},
                 {"log_power", fit.predicted->log_power()},
                 {"coefficient", fit.predicted->coefficient()}};
  }
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (geometry.n != 2) throw InvalidArgument("the solver is implemented for n = 2 only");
  if (eps_list.empty()) throw InvalidArgument("eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0 && eps_list[i] < 1.0)) throw InvalidArgument("eps values must lie in (0, 1)");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw InvalidArgument("eps_list must be strictly decreasing");
    }
  }
  for (double e : slow_eps) {
    if (!(e > 0.0 && e < eps_list.back())) {
      throw InvalidArgument("slow_eps entries must continue the eps list downwards");
    }
  }
  if (probes.empty()) throw InvalidArgument("at least one probe locus is required");
  if (probe_count < 1) throw InvalidArgument("probe_count must be positive");
  if (!(fit.spread_factor > 1.0)) throw InvalidArgument("spread_factor must exceed 1");
  material.validate(geometry.n);
  // Builds the profile (checks m, kappa, contact radius) and the preset pairing.
  classify(data, geometry.profile(), geometry.n);
}

std::vector<double> ExperimentConfig::sweep_eps(bool slow) const {
  std::vector<double> out = eps_list;
  if (slow) {
    for (double e : slow_eps) {
      if (e < out.back()) out.push_back(e);
    }
  }
  return out;
}

std::optional<std::pair<Locus, RateFunction>> predicted_rate(const ExperimentConfig& config) {
  if (config.fit.predicted) {
    return std::make_pair(config.fit.locus.value_or(config.probes.front()), *config.fit.predicted);
  }
  const Prediction p = classify(config.data, config.geometry.profile(), config.geometry.n);
  if (!p.lower) return std::nullopt;
  return std::make_pair(config.fit.locus.value_or(p.lower->locus), p.lower->rate);
}

// ---------------------------------------------------------------------------
// Sweeps

SolveOutcome solve_single(const ExperimentConfig& config, double eps) {
  SolveOutcome out;
  out.domain = std::make_unique<GapDomain>(config.geometry.domain(eps), config.geometry.profile());
  out.mesh = std::make_shared<const Mesh>(generate_mesh(*out.domain, config.geometry.grading));
  Decomposer decomposer(out.mesh, config.material, config.solver);
  out.result = decomposer.decompose(config.data.field());
  for (Locus l : config.probes) {
    const auto pts = probe_points(*out.domain, l, config.probe_count);
    out.probes.emplace_back(l, gradient_probe(out.result.u_rec, pts));
  }
  return out;
}

std::optional<double> SweepRecord::probe(Locus l) const {
  for (const auto& [locus, value] : probes) {
    if (locus == l) return value;
  }
  return std::nullopt;
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& config, int workers, bool slow) {
  config.validate();
  const std::vector<double> eps = config.sweep_eps(slow);
  std::vector<SweepRecord> records(eps.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < eps.size(); i = next++) {
      SweepRecord& r = records[i];
      r.eps = eps[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const SolveOutcome s = solve_single(config, eps[i]);
        r.probes = s.probes;
        r.coeffs = s.result.coeffs;
        r.q = s.result.q;
        r.gram = s.result.gram;
        r.spd_margin = s.result.spd_margin;
        r.min_eigenvalue = s.result.min_eigenvalue;
        r.coeff_residual = s.result.coeff_residual;
        for (double res : s.result.solve_residuals) {
          r.max_solve_residual = std::max(r.max_solve_residual, res);
        }
        r.nodes = s.result.u0.space->num_nodes();
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      r.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int n_threads = std::clamp(workers, 1, static_cast<int>(eps.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  if (std::none_of(records.begin(), records.end(), [](const SweepRecord& r) { return r.ok; })) {
    std::string msg = "every eps of the sweep failed";
    if (!records.empty()) msg += "; first error: " + records.front().error;
    throw Error(msg);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Fits

double log_log_slope(std::span<const double> eps, std::span<const double> values) {
  if (eps.size() != values.size() || eps.size() < 2) {
    throw InvalidArgument("slope fit needs matching eps/value lists of length >= 2");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw InvalidArgument("slope fit needs positive finite values");
    }
    const double x = std::log(eps[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw InvalidArgument("slope fit needs distinct eps values");
  return (n * sxy - sx * sy) / den;
}

FitResult fit_rate(std::span<const double> eps, std::span<const double> values,
                   const RateFunction& predicted, FitMode mode, double spread_factor,
                   double exponent_tol) {
  if (eps.size() < 3 || eps.size() != values.size()) {
    throw InvalidArgument("a rate fit needs at least 3 records");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite value in rate fit");
  }
  FitResult fit;
  fit.mode = predicted.log_corrected() ? FitMode::RateRatio : mode;
  fit.predicted_exponent = predicted.exponent().value();
  fit.slope = log_log_slope(eps, values);
  double rmin = INFINITY, rmax = 0.0, log_sum = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = values[i] / predicted(eps[i]);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    log_sum += std::log(r);
  }
  fit.spread = rmax / rmin;
  fit.constant = std::exp(log_sum / static_cast<double>(eps.size()));
  fit.pass = fit.mode == FitMode::RateRatio
                 ? fit.spread < spread_factor
                 : std::abs(fit.slope - fit.predicted_exponent) <= exponent_tol;
  return fit;
}

std::vector<FitResult> fit_records(const ExperimentConfig& config,
                                   std::span<const SweepRecord> records) {
  const auto pred = predicted_rate(config);
  if (!pred) return {};
  std::vector<double> eps, values;
  for (const auto& r : records) {
    if (!r.ok) continue;
    if (const auto v = r.probe(pred->first)) {
      eps.push_back(r.eps);
      values.push_back(*v);
    }
  }
  if (eps.size() < 3) return {};
  FitResult f = fit_rate(eps, values, pred->second, config.fit.mode, config.fit.spread_factor,
                         config.fit.exponent_tol);
  f.locus = pred->first;
  return {f};
}

ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw InvalidArgument("unknown report format '" + s + "'");
}

namespace {

// Fixed-width scientific formatting keeps reports byte-stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void emit_report(const ExperimentConfig& config, std::span<const SweepRecord> records,
                 std::span<const FitResult> fits, ReportFormat format, std::ostream& out) {
  if (records.empty()) throw InvalidArgument("no records to report");
  const int modes = config.geometry.n * (config.geometry.n + 1) / 2;
  const auto pred = predicted_rate(config);
  auto predicted_at = [&](Locus l, double eps) {
    return pred && pred->first == l ? pred->second(eps) : NAN;
  };

  if (format == ReportFormat::Csv) {
    out << "eps,locus,grad";
    for (int a = 1; a <= modes; ++a) out << ",C_" << a;
    for (int a = 1; a <= modes; ++a) out << ",Q_" << a;
    out << ",spd_margin,predicted,ratio\n";
    for (const auto& r : records) {
      for (Locus l : config.probes) {
        const double grad = r.ok ? r.probe(l).value_or(NAN) : NAN;
        const double p = predicted_at(l, r.eps);
        out << num(r.eps) << ',' << to_string(l) << ',' << num(grad);
        for (int a = 0; a < modes; ++a) out << ',' << num(r.ok ? r.coeffs[a] : NAN);
        for (int a = 0; a < modes; ++a) out << ',' << num(r.ok ? r.q[a] : NAN);
        out << ',' << num(r.ok ? r.spd_margin : NAN) << ',' << num(p) << ',' << num(grad / p)
            << '\n';
      }
    }
    if (!out) throw Error("failed to write the CSV report");
    return;
  }

  nlohmann::ordered_json j;
  j["schema"] = kSweepSchema;
  j["name"] = config.name;
  if (pred) {
    j["prediction"] = {{"locus", to_string(pred->first)}, {"rate", pred->second.str()}};
  } else {
    j["prediction"] = nullptr;
  }
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json e;
    e["eps"] = r.eps;
    e["ok"] = r.ok;
    if (!r.ok) {
      e["error"] = r.error;
      recs.push_back(e);
      continue;
    }
    nlohmann::ordered_json probes = nlohmann::ordered_json::object();
    for (const auto& [l, v] : r.probes) probes[to_string(l)] = v;
    e["probe_gradients"] = probes;
    e["C"] = std::vector<double>(r.coeffs.data(), r.coeffs.data() + r.coeffs.size());
    e["Q"] = std::vector<double>(r.q.data(), r.q.data() + r.q.size());
    auto gram = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < r.gram.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.gram.cols()));
      for (Eigen::Index k = 0; k < r.gram.cols(); ++k) row[static_cast<std::size_t>(k)] = r.gram(i, k);
      gram.push_back(row);
    }
    e["gram"] = gram;
    e["spd_margin"] = r.spd_margin;
    e["min_eigenvalue"] = r.min_eigenvalue;
    e["coefficient_residual"] = r.coeff_residual;
    e["max_solve_residual"] = r.max_solve_residual;
    e["nodes"] = r.nodes;
    if (pred) {
      if (const auto v = r.probe(pred->first)) {
        e["predicted"] = num_or_null(pred->second(r.eps));
        e["ratio"] = num_or_null(*v / pred->second(r.eps));
      }
    }
    recs.push_back(e);
  }
  auto& fit_json = j["fits"] = nlohmann::ordered_json::array();
  for (const auto& f : fits) {
    fit_json.push_back({{"locus", to_string(f.locus)},
                        {"mode", f.mode == FitMode::RateRatio ? "rate_ratio" : "power_fit"},
                        {"slope", f.slope},
                        {"predicted_exponent", f.predicted_exponent},
                        {"spread", f.spread},
                        {"constant", f.constant},
                        {"pass", f.pass}});
  }
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed to write the JSON report");
}

QStarReport q_star_estimate(std::span<const SweepRecord> records) {
  std::vector<double> eps;
  std::vector<Eigen::VectorXd> q;
  for (const auto& r : records) {
    if (!r.ok) continue;
    eps.push_back(r.eps);
    q.push_back(r.q);
  }
  return analyze_q_sequence(eps, q);
}

}  // namespace lamegap
