// Python bindings. Structured results cross the boundary as JSON strings and are
// decoded by the package; vectors and matrices come back as numpy arrays.

#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lamegap/acceptance.hpp"
#include "lamegap/errors.hpp"
#include "lamegap/quadrature.hpp"
#include "lamegap/rates.hpp"
#include "lamegap/sweep.hpp"

namespace py = pybind11;
using namespace lamegap;

namespace {

py::dict record_dict(const SweepRecord& r) {
  py::dict d;
  d["eps"] = r.eps;
  d["ok"] = r.ok;
  d["error"] = r.error;
  py::dict probes;
  for (const auto& [locus, g] : r.probes) probes[py::str(to_string(locus))] = g;
  d["probes"] = probes;
  d["C"] = r.coeffs;
  d["Q"] = r.q;
  d["gram"] = r.gram;
  d["spd_margin"] = r.spd_margin;
  d["nodes"] = r.nodes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient blow-up analysis for Lame systems with a nearby hard inclusion";

  static py::exception<Error> error(m, "LamegapError");
  static py::exception<HypothesisViolation> hypothesis(m, "HypothesisViolation", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const HypothesisViolation& e) {
      PyErr_SetString(hypothesis.ptr(), (e.condition() + ": " + e.what()).c_str());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("rho", py::overload_cast<int, int, int, double>(&rho), py::arg("i"), py::arg("n"),
        py::arg("m"), py::arg("eps"), "rho_i(n, m; eps)");
  m.def("rho_form", [](int i, int n, int mm) { return rho(i, n, mm).str(); }, py::arg("i"),
        py::arg("n"), py::arg("m"), "Symbolic form of rho_i(n, m)");
  m.def("gap_integral",
        [](int k, int mm, int n, double eps, double R, double disk_radius) {
          const ContactSet s = disk_radius > 0 ? ContactSet::disk(disk_radius) : ContactSet::point();
          return gap_integral(k, mm, n, eps, R, s);
        },
        py::arg("k"), py::arg("m"), py::arg("n"), py::arg("eps"), py::arg("R") = 1.0,
        py::arg("disk_radius") = 0.0);
  m.def("flat_contact_integral", &flat_contact_integral, py::arg("k"), py::arg("m"), py::arg("n"),
        py::arg("eps"), py::arg("r"), py::arg("R"));
  m.def("verify_rate_equivalence",
        [](int k, int mm, int n, const std::vector<double>& eps, double R, double spread_factor) {
          const RatioReport rep = verify_rate_equivalence(k, mm, n, eps, R, spread_factor);
          std::vector<double> ratios;
          for (const auto& row : rep.rows) ratios.push_back(row.ratio);
          py::dict d;
          d["spread"] = rep.spread;
          d["pass"] = rep.pass;
          d["ratios"] = ratios;
          return d;
        },
        py::arg("k"), py::arg("m"), py::arg("n"), py::arg("eps_list"), py::arg("R") = 1.0,
        py::arg("spread_factor") = 3.0);

  m.def("_classify",
        [](const std::string& preset, int mm, int k, double eta, const std::string& variant,
           const std::string& parity) {
          BoundaryData data;
          data.preset = parse_preset(preset);
          data.k = k;
          data.eta = eta;
          if (data.preset == Preset::CustomParity) data.custom_parity = parse_parity(parity);
          const ProfileVariant v = variant == "tilted" ? ProfileVariant::Tilted : ProfileVariant::PurePower;
          if (variant != "tilted" && variant != "pure_power") {
            throw InvalidArgument("variant must be pure_power or tilted");
          }
          return prediction_to_json(classify(data, build_gap_profile(mm, ContactSet::point(), v)));
        },
        py::arg("preset"), py::arg("m"), py::arg("k"), py::arg("eta"), py::arg("variant"),
        py::arg("parity"));

  m.def("builtin_config_names", &builtin_config_names);
  m.def("_builtin_config", [](const std::string& name) { return builtin_config(name).to_json(); });
  m.def("_normalize_config",
        [](const std::string& text) { return ExperimentConfig::from_json(text).to_json(); });

  m.def("_run_sweep",
        [](const std::string& config_json, int workers, bool slow) {
          const ExperimentConfig c = ExperimentConfig::from_json(config_json);
          std::vector<SweepRecord> recs;
          {
            py::gil_scoped_release release;
            recs = run_sweep(c, workers, slow);
          }
          py::list out;
          for (const auto& r : recs) out.append(record_dict(r));
          return out;
        },
        py::arg("config_json"), py::arg("workers") = 1, py::arg("slow") = false);
  m.def("_sweep_report",
        [](const std::string& config_json, const std::string& format, int workers, bool slow) {
          const ExperimentConfig c = ExperimentConfig::from_json(config_json);
          std::ostringstream out;
          {
            py::gil_scoped_release release;
            const auto recs = run_sweep(c, workers, slow);
            emit_report(c, recs, fit_records(c, recs), parse_format(format), out);
          }
          return out.str();
        },
        py::arg("config_json"), py::arg("format") = "csv", py::arg("workers") = 1,
        py::arg("slow") = false);
  m.def("_solve",
        [](const std::string& config_json, double eps) {
          const ExperimentConfig c = ExperimentConfig::from_json(config_json);
          c.validate();
          std::string record;
          {
            py::gil_scoped_release release;
            const SolveOutcome s = solve_single(c, eps);
            ResultRecordMeta meta{eps, c.geometry.m, c.data.k, c.data.name(), {}};
            for (const auto& [locus, g] : s.probes) meta.probe_gradients.emplace_back(to_string(locus), g);
            record = result_to_json(s.result, meta);
          }
          return record;
        },
        py::arg("config_json"), py::arg("eps"));

  m.def("run_criterion",
        [](int id, bool slow, int workers) {
          CriterionResult r;
          {
            py::gil_scoped_release release;
            r = run_criterion(id, AcceptanceOptions{slow, workers});
          }
          py::dict d;
          d["id"] = r.id;
          d["name"] = r.name;
          d["pass"] = r.pass;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          return d;
        },
        py::arg("id"), py::arg("slow") = false, py::arg("workers") = 1);
  m.attr("criterion_count") = kCriterionCount;
}
