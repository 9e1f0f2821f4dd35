#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "v2xslice/channel.hpp"
#include "v2xslice/config.hpp"
#include "v2xslice/errors.hpp"
#include "v2xslice/link_abstraction.hpp"
#include "v2xslice/metrics.hpp"
#include "v2xslice/runner.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/simulator.hpp"
#include "v2xslice/slicing.hpp"

namespace py = pybind11;
using namespace v2x;

namespace {

std::vector<double> rates_kbps(const MetricsAccumulator& m, Slice slice) {
  std::vector<double> out;
  const double w = static_cast<double>(m.window_ms());
  for (const auto& s : m.samples(slice)) out.push_back(w > 0 ? static_cast<double>(s.window_bits) / w : 0.0);
  return out;
}

py::dict metrics_dict(const MetricsAccumulator& m) {
  py::dict d;
  d["prr"] = m.records().empty() ? 0.0 : m.safety_prr();
  d["packets"] = m.records().size();
  d["window_ms"] = m.window_ms();
  d["safety_kbps"] = rates_kbps(m, Slice::Safety);
  d["video_kbps"] = rates_kbps(m, Slice::Video);
  d["p_safety_128"] = m.target_probability(Slice::Safety, 128.0);
  d["p_video_1000"] = m.target_probability(Slice::Video, 1000.0);
  return d;
}

py::dict stats_dict(const RunStats& s) {
  py::dict d;
  d["vehicles"] = s.vehicles;
  d["video_vehicles"] = s.video_vehicles;
  d["ap_counts"] = s.ap_counts;
  d["relay_counts"] = s.relay_counts;
  d["transmissions"] = s.transmissions;
  d["retransmissions"] = s.retransmissions;
  d["harq_drops"] = s.harq_drops;
  d["generated_bits"] = s.generated_bits;
  d["delivered_bits"] = s.delivered_bits;
  return d;
}

py::dict cell_dict(const CellResult& c) {
  py::dict d = metrics_dict(c.metrics);
  d["scenario"] = c.spec.scenario;
  d["technology"] = technology_name(c.spec.technology);
  d["sigma"] = sigma_label(c.spec);
  d["seeds"] = c.seeds;
  d["median_ap_count"] = c.median_ap_count();
  d["median_relay_count"] = c.median_relay_count();
  py::list runs;
  for (const auto& r : c.runs) runs.append(stats_dict(r));
  d["runs"] = runs;
  return d;
}

SimConfig with_overrides(SimConfig cfg, const std::map<std::string, std::string>& overrides) {
  for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
  cfg.validate();
  return cfg;
}

std::vector<Position> positions_of(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("xs and ys differ in length");
  std::vector<Position> p(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = {xs[i], ys[i]};
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Network-sliced C-V2X highway simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  py::class_<SimConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_text", [](const std::string& text) { return parse_config_text(text); }, py::arg("text"))
      .def_static("from_file", &parse_config, py::arg("path"))
      .def("set", [](SimConfig& c, const std::string& key, const std::string& value) { apply_config_key(c, key, value); },
           py::arg("key"), py::arg("value"))
      .def("validate", &SimConfig::validate)
      .def("echo", [](const SimConfig& c) {
        py::dict d;
        for (const auto& [k, v] : c.echo()) d[py::str(k)] = v;
        return d;
      })
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("duration_ms", &SimConfig::duration_ms)
      .def_property_readonly("scenario", [](const SimConfig& c) { return c.scenario; })
      .def_property_readonly("technology", [](const SimConfig& c) { return std::string(technology_name(c.technology)); })
      .def("__repr__", [](const SimConfig& c) {
        return "<Config " + c.scenario + " " + technology_name(c.technology) + " seed=" + std::to_string(c.seed) + ">";
      });

  m.def("default_data_dir", &default_data_dir);
  m.def("sha256_file", &sha256_file, py::arg("path"));

  m.def(
      "simulate",
      [](const SimConfig& cfg, const std::map<std::string, std::string>& overrides) {
        const auto c = with_overrides(cfg, overrides);
        const auto model = load_link_model(c);
        RunResult r;
        {
          py::gil_scoped_release nogil;
          r = simulate(c, model);
        }
        py::dict d = metrics_dict(r.metrics);
        d["stats"] = stats_dict(r.stats);
        return d;
      },
      py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs one drop and returns PRR, per-vehicle rates and run counters.");

  m.def(
      "run_matrix",
      [](const SimConfig& base, const std::vector<std::string>& scenarios, const std::vector<std::string>& techs,
         const std::vector<double>& sigmas, int seeds) {
        base.validate();
        std::vector<Technology> t;
        for (const auto& s : techs) t.push_back(parse_technology(s));
        const auto model = load_link_model(base);
        std::vector<CellResult> cells;
        {
          py::gil_scoped_release nogil;
          cells = run_matrix(base, scenarios, t, sigmas, seeds, model);
        }
        py::list out;
        for (const auto& c : cells) out.append(cell_dict(c));
        return out;
      },
      py::arg("config"), py::arg("scenarios"), py::arg("technologies"), py::arg("sigmas"), py::arg("seeds") = 1);

  m.def(
      "run",
      [](const SimConfig& cfg, const std::filesystem::path& out_dir, bool trace) {
        py::scoped_ostream_redirect log;
        return run_command(cfg, out_dir, trace, std::cout);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("trace") = false,
      "Same as `v2xsim run`; returns the exit code.");

  m.def(
      "generate_drop",
      [](const SimConfig& cfg) {
        // same stream the simulator draws its topology from
        RngStream rng = RngStream(cfg.seed).substream("topology").substream(scenario_label(cfg.layout.band));
        const auto s = generate_drop(cfg.layout, rng);
        py::list vehicles, rsus;
        for (const auto& v : s.vehicles)
          vehicles.append(py::dict(py::arg("id") = v.id, py::arg("x") = v.position.x, py::arg("y") = v.position.y,
                                   py::arg("lane") = v.lane, py::arg("speed") = v.speed * v.direction,
                                   py::arg("video") = v.wants_video));
        for (const auto& r : s.rsus)
          rsus.append(py::dict(py::arg("id") = r.id, py::arg("x") = r.position.x, py::arg("y") = r.position.y));
        return py::dict(py::arg("vehicles") = vehicles, py::arg("rsus") = rsus,
                        py::arg("highway_length") = s.highway_length);
      },
      py::arg("config"));

  m.def(
      "similarity",
      [](const std::vector<double>& xs, const std::vector<double>& ys, double sigma, double highway_length) {
        const auto p = positions_of(xs, ys);
        return similarity(p, sigma, highway_length).c;
      },
      py::arg("xs"), py::arg("ys"), py::arg("sigma"), py::arg("highway_length") = 2000.0);
  m.def(
      "laplacian_eigenvalues",
      [](const Eigen::MatrixXd& c) {
        SimilarityMatrix s{c, 1.0};
        return laplacian(s).eigenvalues;
      },
      py::arg("similarity"));
  m.def(
      "eigengap_count", [](const std::vector<double>& z, int e_max) { return eigengap_count(z, e_max); },
      py::arg("eigenvalues"), py::arg("e_max"));

  m.def("pathloss_v2i", [](double d) { return pathloss_v2i(d); }, py::arg("d_m"));
  m.def("pathloss_v2v", [](double d) { return pathloss_v2v(d); }, py::arg("d_m"));
  m.def("bicm_capacity", &bicm_capacity, py::arg("modulation_order"), py::arg("snr_linear"));
  m.def(
      "miesm_effective_sinr",
      [](const std::vector<double>& sinr, int order) {
        static const MiCurves curves = MiCurves::load(resolved_mi_path(SimConfig{}));
        return miesm_effective_sinr(sinr, order, curves);
      },
      py::arg("per_prb_sinr"), py::arg("modulation_order"));
  static const McsTable table = McsTable::builtin();
  m.def(
      "bler",
      [](double eff_db, int mcs_index) { return bler(eff_db, table.at(mcs_index)); },
      py::arg("effective_sinr_db"), py::arg("mcs_index"));
  m.def(
      "select_mcs", [](double cqi_db) { return select_mcs(cqi_db, table).index; },
      py::arg("cqi_effective_sinr_db"));

  m.def(
      "prr",
      [](const std::vector<std::pair<int, int>>& packets) {
        std::vector<ReceptionRecord> recs;
        for (const auto& [intended, ok] : packets) recs.push_back({0, Slice::Safety, intended, ok});
        return prr(recs);
      },
      py::arg("packets"), "packets: (intended, successes) pairs");
  m.def(
      "rate_cdf",
      [](std::vector<double> rates, const std::vector<double>& grid) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : rate_cdf(std::move(rates), grid)) out.emplace_back(p.kbps, p.cdf);
        return out;
      },
      py::arg("rates_kbps"), py::arg("grid_kbps"));
}
