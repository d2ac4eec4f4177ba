// lamegap command line front end.
//
//   lamegap rates     rate functions over an (m, k, eps) grid
//   lamegap classify  locus and rate prediction for one geometry and datum
//   lamegap oracle    quadrature check of the rate equivalences
//   lamegap solve     one decomposition, with mesh, probe and record exports
//   lamegap sweep     eps sweep with rate fits
//   lamegap validate  acceptance suite
//
// Exit status: 0 when every requested check passes, 1 when a check fails,
// 2 on usage or configuration errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include "lamegap/acceptance.hpp"
#include "lamegap/errors.hpp"
#include "lamegap/quadrature.hpp"
#include "lamegap/rates.hpp"
#include "lamegap/sweep.hpp"

namespace po = boost::program_options;
namespace fs = std::filesystem;
using namespace lamegap;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string builtin;
  std::string out;
  std::string format = "csv";
  int workers = 1;
  bool slow = false;
};

po::options_description common_options(Common& c) {
  po::options_description d("Common options");
  d.add_options()
      ("help,h", "show help for the subcommand")
      ("config", po::value(&c.config), "experiment config file (JSON)")
      ("builtin", po::value(&c.builtin), "built-in experiment config by name")
      ("out", po::value(&c.out), "output directory (stdout when omitted)")
      ("format", po::value(&c.format)->default_value("csv"), "csv or json")
      ("workers", po::value(&c.workers)->default_value(1), "worker threads")
      ("slow", po::bool_switch(&c.slow), "extend sweeps by one decade");
  return d;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

// Writes `text` to <out>/<name>, or to stdout without --out.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write " + path.string());
  std::cerr << "wrote " << path.string() << "\n";
}

ExperimentConfig load_config(const Common& c) {
  if (!c.config.empty() && !c.builtin.empty()) throw UsageError("give --config or --builtin, not both");
  if (!c.config.empty()) return ExperimentConfig::from_file(c.config);
  if (!c.builtin.empty()) return builtin_config(c.builtin);
  throw UsageError("a --config file or --builtin name is required");
}

std::vector<int> int_range(const std::string& s) {
  // "2", "2:6" or "2,3,5"
  std::vector<int> out;
  if (const auto colon = s.find(':'); colon != std::string::npos) {
    const int a = std::stoi(s.substr(0, colon)), b = std::stoi(s.substr(colon + 1));
    for (int i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_rates(const Common& c, const po::variables_map& vm) {
  const auto ns = int_range(vm["n"].as<std::string>());
  const auto ms = int_range(vm["m"].as<std::string>());
  const auto ks = int_range(vm["k"].as<std::string>());
  const auto eps = double_list(vm["eps"].as<std::string>());
  const ReportFormat format = parse_format(c.format);
  const Parity parities[] = {Parity::A1, Parity::A2, Parity::A3};

  std::ostringstream csv;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  csv << "n,m,k,parity,eps,rho_0,rho_k,rho_A,rho_B,shortest_line\n";
  for (int n : ns) {
    for (int m : ms) {
      for (int k : ks) {
        const RateFunction shortest = shortest_line_rate(n, m, k);
        for (Parity p : parities) {
          const RhoAB ab = rho_AB(p, k, n, m);
          for (double e : eps) {
            const double r0 = rho(0, n, m, e), rk = rho(k, n, m, e);
            csv << n << ',' << m << ',' << k << ',' << to_string(p) << ',' << num(e) << ','
                << num(r0) << ',' << num(rk) << ',' << num(ab.a(e)) << ',' << num(ab.b(e)) << ','
                << num(shortest(e)) << '\n';
            rows.push_back({{"n", n}, {"m", m}, {"k", k}, {"parity", to_string(p)}, {"eps", e},
                            {"rho_0", r0}, {"rho_k", rk}, {"rho_A", ab.a(e)}, {"rho_B", ab.b(e)},
                            {"rho_A_form", ab.a.str()}, {"rho_B_form", ab.b.str()},
                            {"shortest_line", shortest(e)}});
          }
        }
      }
    }
  }
  if (format == ReportFormat::Csv) {
    emit(c, "rates.csv", csv.str());
  } else {
    emit(c, "rates.json", rows.dump(2) + "\n");
  }
  return 0;
}

int cmd_classify(const Common& c, const po::variables_map& vm) {
  GapProfile profile = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  BoundaryData data;
  if (!c.config.empty() || !c.builtin.empty()) {
    const ExperimentConfig cfg = load_config(c);
    profile = cfg.geometry.profile();
    data = cfg.data;
  } else {
    const int m = vm["m"].as<int>();
    const ProfileVariant variant =
        vm["variant"].as<std::string>() == "tilted" ? ProfileVariant::Tilted : ProfileVariant::PurePower;
    profile = build_gap_profile(m, ContactSet::point(), variant);
    data.preset = parse_preset(vm["preset"].as<std::string>());
    data.k = vm["k"].as<int>();
    data.eta = vm["eta"].as<double>();
    if (data.preset == Preset::CustomParity) data.custom_parity = parse_parity(vm["parity"].as<std::string>());
  }
  const Prediction p = classify(data, profile, 2);
  if (parse_format(c.format) == ReportFormat::Json) {
    emit(c, "prediction.json", prediction_to_json(p) + "\n");
  } else {
    std::ostringstream csv;
    csv << "n,m,k,eta,parity,locus,lower_locus,lower_rate,regime\n"
        << p.n << ',' << p.m << ',' << p.k << ',' << num(p.eta) << ',' << to_string(p.parity) << ','
        << to_string(p.locus) << ',' << (p.lower ? to_string(p.lower->locus) : "") << ','
        << (p.lower ? p.lower->rate.str() : "") << ",\"" << p.regime << "\"\n";
    emit(c, "prediction.csv", csv.str());
  }
  return 0;
}

int cmd_oracle(const Common& c, const po::variables_map& vm) {
  const auto ns = int_range(vm["n"].as<std::string>());
  const auto ms = int_range(vm["m"].as<std::string>());
  const auto ks = int_range(vm["k"].as<std::string>());
  const auto eps = double_list(vm["eps"].as<std::string>());
  const double spread = vm["spread"].as<double>();
  const ReportFormat format = parse_format(c.format);

  std::ostringstream csv;
  nlohmann::ordered_json cases = nlohmann::ordered_json::array();
  csv << "n,m,k,eps,integral,rate,ratio,spread,pass\n";
  int failures = 0;
  for (int n : ns) {
    for (int m : ms) {
      for (int k : ks) {
        const RatioReport rep = verify_rate_equivalence(k, m, n, eps, 1.0, spread);
        failures += rep.pass ? 0 : 1;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : rep.rows) {
          csv << n << ',' << m << ',' << k << ',' << num(row.eps) << ',' << num(row.integral) << ','
              << num(row.rate) << ',' << num(row.ratio) << ',' << num(rep.spread) << ','
              << (rep.pass ? 1 : 0) << '\n';
          rows.push_back({{"eps", row.eps}, {"integral", row.integral}, {"rate", row.rate},
                          {"ratio", row.ratio}});
        }
        cases.push_back({{"n", n}, {"m", m}, {"k", k}, {"rate", rho(k, n, m).str()},
                         {"spread", rep.spread}, {"pass", rep.pass}, {"rows", rows}});
      }
    }
  }
  if (format == ReportFormat::Csv) {
    emit(c, "oracle.csv", csv.str());
  } else {
    nlohmann::ordered_json j;
    j["schema"] = "lamegap.oracle/1";
    j["spread_factor"] = spread;
    j["cases"] = cases;
    emit(c, "oracle.json", j.dump(2) + "\n");
  }
  std::cerr << cases.size() - failures << "/" << cases.size() << " oracle cases passed\n";
  return failures == 0 ? 0 : kExitFail;
}

int cmd_solve(const Common& c, const po::variables_map& vm) {
  ExperimentConfig cfg = load_config(c);
  if (vm["dump-config"].as<bool>()) {
    std::cout << cfg.to_json() << "\n";
    return 0;
  }
  const double eps = vm.count("eps") ? vm["eps"].as<double>() : cfg.geometry.eps;
  cfg.validate();
  const SolveOutcome s = solve_single(cfg, eps);

  ResultRecordMeta meta{eps, cfg.geometry.m, cfg.data.k, cfg.data.name(), {}};
  for (const auto& [locus, g] : s.probes) meta.probe_gradients.emplace_back(to_string(locus), g);
  const std::string record = result_to_json(s.result, meta) + "\n";
  if (c.out.empty()) {
    std::cout << record;
    return 0;
  }
  emit(c, "result.json", record);
  std::ostringstream mesh;
  write_mesh_text(*s.mesh, mesh);
  emit(c, "mesh.txt", mesh.str());
  for (Locus l : cfg.probes) {
    std::ostringstream probe;
    write_probe_csv(s.result.u_rec, probe_points(*s.domain, l, cfg.probe_count), probe);
    emit(c, "probes_" + to_string(l) + ".csv", probe.str());
  }
  return 0;
}

int cmd_sweep(const Common& c, const po::variables_map& vm) {
  const ExperimentConfig cfg = load_config(c);
  if (vm["dump-config"].as<bool>()) {
    std::cout << cfg.to_json() << "\n";
    return 0;
  }
  const ReportFormat format = parse_format(c.format);
  const auto records = run_sweep(cfg, c.workers, c.slow);
  const auto fits = fit_records(cfg, records);
  std::ostringstream report;
  emit_report(cfg, records, fits, format, report);
  emit(c, format == ReportFormat::Csv ? "sweep.csv" : "sweep.json", report.str());

  bool ok = true;
  for (const auto& r : records) {
    if (!r.ok) {
      std::cerr << "eps " << r.eps << " failed: " << r.error << "\n";
      ok = false;
    }
  }
  for (const auto& f : fits) {
    std::cerr << "fit at " << to_string(f.locus) << ": slope " << f.slope << ", predicted exponent "
              << f.predicted_exponent << ", spread " << f.spread << (f.pass ? " PASS" : " FAIL")
              << "\n";
    ok = ok && f.pass;
  }
  return ok ? 0 : kExitFail;
}

int cmd_validate(const Common& c, const po::variables_map& vm) {
  std::vector<int> ids;
  if (vm.count("only")) ids = int_range(vm["only"].as<std::string>());
  AcceptanceOptions opts;
  opts.slow = c.slow;
  opts.workers = c.workers;
  std::ostringstream log;
  const auto results = run_acceptance(opts, ids, &std::cout);
  int failed = 0;
  for (const auto& r : results) {
    log << format_result(r) << "\n";
    failed += r.pass ? 0 : 1;
  }
  if (!c.out.empty()) emit(c, "validate.txt", log.str());
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : kExitFail;
}

void usage(std::ostream& out) {
  out << "usage: lamegap <command> [options]\n\n"
         "commands:\n"
         "  rates      rate functions rho_i, rho_A, rho_B over a grid\n"
         "  classify   locus and lower-rate prediction\n"
         "  oracle     quadrature check of the rate equivalences\n"
         "  solve      single decomposition with mesh, probe and JSON exports\n"
         "  sweep      eps sweep with rate fits\n"
         "  validate   acceptance suite\n\n"
         "run 'lamegap <command> --help' for the options of a command\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h") {
    usage(argc < 2 ? std::cerr : std::cout);
    return argc < 2 ? kExitUsage : 0;
  }
  const std::string command = argv[1];
  Common common;
  po::options_description options = common_options(common);
  po::options_description specific(command + " options");
  if (command == "rates") {
    specific.add_options()
        ("n", po::value<std::string>()->default_value("2"), "dimension(s): 2, 2:4 or 2,3")
        ("m", po::value<std::string>()->default_value("2:6"), "contact order(s)")
        ("k", po::value<std::string>()->default_value("1:4"), "data order(s)")
        ("eps", po::value<std::string>()->default_value("1e-2,1e-3,1e-4,1e-5,1e-6"), "eps list");
  } else if (command == "classify") {
    specific.add_options()
        ("m", po::value<int>()->default_value(2), "contact order")
        ("k", po::value<int>()->default_value(1), "data order")
        ("eta", po::value<double>()->default_value(1.0), "data amplitude")
        ("preset", po::value<std::string>()->default_value("phi_three"), "boundary data preset")
        ("variant", po::value<std::string>()->default_value("pure_power"), "pure_power or tilted")
        ("parity", po::value<std::string>()->default_value("A1"), "parity class of a custom preset");
  } else if (command == "oracle") {
    specific.add_options()
        ("n", po::value<std::string>()->default_value("2:4"), "dimension(s)")
        ("m", po::value<std::string>()->default_value("2:6"), "contact order(s)")
        ("k", po::value<std::string>()->default_value("0:4"), "data order(s)")
        ("eps", po::value<std::string>()->default_value("1e-2,1e-3,1e-4,1e-5,1e-6,1e-7"), "eps list")
        ("spread", po::value<double>()->default_value(3.0), "allowed max/min ratio");
  } else if (command == "solve") {
    specific.add_options()
        ("eps", po::value<double>(), "gap (default: geometry.eps of the config)")
        ("dump-config", po::bool_switch(), "print the resolved config and exit");
  } else if (command == "validate") {
    specific.add_options()("only", po::value<std::string>(), "criterion ids: 3, 1:5 or 2,7");
  } else if (command == "sweep") {
    specific.add_options()("dump-config", po::bool_switch(), "print the resolved config and exit");
  } else {
    std::cerr << "lamegap: unknown command '" << command << "'\n\n";
    usage(std::cerr);
    return kExitUsage;
  }
  options.add(specific);

  try {
    po::variables_map vm;
    po::store(po::parse_command_line(argc - 1, argv + 1, options), vm);
    if (vm.count("help")) {
      std::cout << "usage: lamegap " << command << " [options]\n\n" << options;
      if (command == "sweep" || command == "solve" || command == "classify") {
        std::cout << "\nbuilt-in configs:";
        for (const auto& name : builtin_config_names()) std::cout << ' ' << name;
        std::cout << '\n';
      }
      return 0;
    }
    po::notify(vm);
    if (common.workers < 1) throw UsageError("--workers must be at least 1");
    if (command == "rates") return cmd_rates(common, vm);
    if (command == "classify") return cmd_classify(common, vm);
    if (command == "oracle") return cmd_oracle(common, vm);
    if (command == "solve") return cmd_solve(common, vm);
    if (command == "sweep") return cmd_sweep(common, vm);
    return cmd_validate(common, vm);
  } catch (const po::error& e) {
    std::cerr << "lamegap " << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "lamegap " << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const HypothesisViolation& e) {
    std::cerr << "lamegap " << command << ": hypothesis '" << e.condition() << "' violated: " << e.what()
              << "\n";
    return kExitFail;
  } catch (const InvalidArgument& e) {
    std::cerr << "lamegap " << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "lamegap " << command << ": " << e.what() << "\n";
    return kExitFail;
  }
}
