#include "v2xslice/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "v2xslice/errors.hpp"

namespace v2x {

namespace fs = std::filesystem;

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string sigma_label(const CellSpec& cell) {
  return uses_slicing(cell.technology) ? format_g6(cell.sigma) : "-";
}

double CellResult::median_ap_count() const {
  std::vector<int> all;
  for (const auto& r : runs) all.insert(all.end(), r.ap_counts.begin(), r.ap_counts.end());
  return median(all);
}

double CellResult::median_relay_count() const {
  std::vector<int> all;
  for (const auto& r : runs) all.insert(all.end(), r.relay_counts.begin(), r.relay_counts.end());
  return median(all);
}

SimConfig cell_config(const SimConfig& base, const CellSpec& cell, std::uint64_t seed) {
  SimConfig cfg = base;
  apply_config_key(cfg, "scenario", cell.scenario);
  cfg.technology = cell.technology;
  cfg.slicing.sigma = cell.sigma;
  cfg.seed = seed;
  return cfg;
}

CellResult run_cell(const SimConfig& base, const CellSpec& cell,
                    const std::vector<std::uint64_t>& seeds, const LinkModel& model,
                    const TraceSinks& trace) {
  if (seeds.empty()) throw ConfigError("no seeds given");
  const auto start = std::chrono::steady_clock::now();
  CellResult res;
  res.spec = cell;
  res.seeds = seeds;
  for (auto seed : seeds) {
    RunResult r = simulate(cell_config(base, cell, seed), model, trace);
    res.metrics.merge(r.metrics);
    res.runs.push_back(std::move(r.stats));
  }
  res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<CellResult> run_matrix(const SimConfig& base, const std::vector<std::string>& scenarios,
                                   const std::vector<Technology>& technologies,
                                   const std::vector<double>& sigmas, int seed_count,
                                   const LinkModel& model) {
  if (scenarios.empty()) throw ConfigError("matrix: empty scenario list");
  if (technologies.empty()) throw ConfigError("matrix: empty technology list");
  if (sigmas.empty()) throw ConfigError("matrix: empty sigma list");
  if (seed_count < 1) throw ConfigError("matrix: seeds must be positive");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < seed_count; ++i) seeds.push_back(base.seed + static_cast<std::uint64_t>(i));

  std::vector<CellSpec> cells;
  for (const auto& s : scenarios) {
    parse_scenario(s);
    for (auto tech : technologies) {
      if (uses_slicing(tech)) {
        for (double sigma : sigmas) cells.push_back({s, tech, sigma});
      } else {
        cells.push_back({s, tech, base.slicing.sigma});
      }
    }
  }
  std::vector<CellResult> out;
  for (const auto& c : cells) {
    const std::string name = c.scenario + "/" + technology_name(c.technology) + "/sigma=" + sigma_label(c);
    try {
      out.push_back(run_cell(base, c, seeds, model));
    } catch (const ConfigError& e) {
      throw ConfigError("matrix cell " + name + ": " + e.what());
    } catch (const InvariantViolation& e) {
      throw InvariantViolation("matrix cell " + name + ": " + e.what());
    }
  }
  return out;
}

void write_prr_table(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "scenario,technology,sigma,prr,records\n";
  for (const auto& c : cells) {
    out << c.spec.scenario << ',' << technology_name(c.spec.technology) << ',' << sigma_label(c.spec)
        << ',' << format_g6(c.prr()) << ',' << c.metrics.records().size() << '\n';
  }
}

void write_throughput_cdf(std::ostream& out, const std::vector<CellResult>& cells, Slice slice,
                          const std::vector<double>& grid_kbps) {
  out << "scenario,technology,sigma,kbps,cdf\n";
  for (const auto& c : cells) {
    const auto cdf = c.metrics.cdf(slice, grid_kbps);
    for (const auto& p : cdf) {
      out << c.spec.scenario << ',' << technology_name(c.spec.technology) << ',' << sigma_label(c.spec)
          << ',' << format_g6(p.kbps) << ',' << format_g6(p.cdf) << '\n';
    }
  }
}

void write_summary(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "scenario,technology,sigma,slice,target_kbps,p_target,vehicles,mean_kbps,prr,"
         "median_ap_count,median_relays\n";
  for (const auto& c : cells) {
    for (auto slice : {Slice::Safety, Slice::Video}) {
      const double target = slice == Slice::Safety ? 128.0 : 1000.0;
      const auto& samples = c.metrics.samples(slice);
      double mean = 0.0;
      for (const auto& s : samples) mean += static_cast<double>(s.window_bits);
      if (!samples.empty()) mean /= static_cast<double>(samples.size()) * static_cast<double>(c.metrics.window_ms());
      out << c.spec.scenario << ',' << technology_name(c.spec.technology) << ',' << sigma_label(c.spec)
          << ',' << (slice == Slice::Safety ? "safety" : "video") << ',' << format_g6(target) << ','
          << format_g6(samples.empty() ? 0.0 : c.metrics.target_probability(slice, target)) << ','
          << samples.size() << ',' << format_g6(mean) << ',' << format_g6(c.prr()) << ','
          << format_g6(c.median_ap_count()) << ',' << format_g6(c.median_relay_count()) << '\n';
    }
  }
}

void write_run_meta(std::ostream& out, const SimConfig& cfg, const LinkModel& model,
                    const std::vector<CellResult>& cells, double wall_s) {
  out << "# v2xslice run metadata\n[config]\n";
  for (const auto& [k, v] : cfg.echo()) out << k << " = " << v << '\n';
  out << "\n[data]\n";
  out << "mcs_table = " << resolved_mcs_path(cfg).string() << '\n';
  out << "mcs_table_sha256 = " << model.mcs_sha256 << '\n';
  out << "mi_curves = " << resolved_mi_path(cfg).string() << '\n';
  out << "mi_curves_sha256 = " << model.mi_sha256 << '\n';
  out << "\n[cells]\n";
  for (const auto& c : cells) {
    out << c.spec.scenario << ',' << technology_name(c.spec.technology) << ',' << sigma_label(c.spec)
        << " seeds=";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? " " : "") << c.seeds[i];
    out << " wall_s=" << format_g6(c.wall_s) << '\n';
  }
  out << "\n[run]\nwall_time_s = " << format_g6(wall_s) << '\n';
}

std::vector<fs::path> write_outputs(const fs::path& dir, const SimConfig& cfg, const LinkModel& model,
                                    const std::vector<CellResult>& cells, double wall_s) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto open = [&](const char* name) {
    written.push_back(dir / name);
    auto f = std::make_unique<std::ofstream>(written.back());
    if (!*f) throw ConfigError("cannot write " + written.back().string());
    return f;
  };
  const auto grid = default_kbps_grid();
  write_prr_table(*open("prr_table.csv"), cells);
  write_throughput_cdf(*open("throughput_cdf_safety.csv"), cells, Slice::Safety, grid);
  write_throughput_cdf(*open("throughput_cdf_video.csv"), cells, Slice::Video, grid);
  write_summary(*open("summary.csv"), cells);
  write_run_meta(*open("run_meta"), cfg, model, cells, wall_s);
  return written;
}

namespace {

void remove_all(const std::vector<fs::path>& paths) {
  std::error_code ec;
  for (const auto& p : paths) fs::remove(p, ec);
}

}  // namespace

int run_command(const SimConfig& cfg, const fs::path& out_dir, bool trace, std::ostream& log) {
  std::vector<fs::path> created;
  try {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const LinkModel model = load_link_model(cfg);

    std::vector<std::unique_ptr<std::ofstream>> trace_files;
    TraceSinks sinks;
    if (trace) {
      fs::create_directories(out_dir);
      auto open = [&](const char* name) {
        created.push_back(out_dir / name);
        trace_files.push_back(std::make_unique<std::ofstream>(created.back()));
        return trace_files.back().get();
      };
      sinks.sinr = open("trace_sinr.csv");
      sinks.deliveries = open("trace_deliveries.csv");
      sinks.association = open("trace_association.csv");
      if (uses_slicing(cfg.technology)) sinks.plans = open("trace_plans.csv");
      if (uses_relaying(cfg.technology)) sinks.relays = open("trace_relays.csv");
    }
    const CellSpec cell{cfg.scenario, cfg.technology, cfg.slicing.sigma};
    std::vector<CellResult> cells{run_cell(cfg, cell, {cfg.seed}, model, sinks)};
    trace_files.clear();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& p : write_outputs(out_dir, cfg, model, cells, wall)) created.push_back(p);
    log << "prr " << format_g6(cells.front().prr()) << "  wall " << format_g6(wall) << " s\n";
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    remove_all(created);
    return 1;
  } catch (const InvariantViolation& e) {
    log << "invariant violation: " << e.what() << '\n';
    remove_all(created);
    return 2;
  }
}

int matrix_command(const SimConfig& base, const std::vector<std::string>& scenarios,
                   const std::vector<Technology>& technologies, const std::vector<double>& sigmas,
                   int seed_count, const fs::path& out_dir, std::ostream& log) {
  std::vector<fs::path> created;
  try {
    base.validate();
    const auto start = std::chrono::steady_clock::now();
    const LinkModel model = load_link_model(base);
    auto cells = run_matrix(base, scenarios, technologies, sigmas, seed_count, model);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    created = write_outputs(out_dir, base, model, cells, wall);
    for (const auto& c : cells) {
      log << c.spec.scenario << ' ' << technology_name(c.spec.technology) << " sigma=" << sigma_label(c.spec)
          << " prr=" << format_g6(c.prr()) << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    remove_all(created);
    return 1;
  } catch (const InvariantViolation& e) {
    log << "invariant violation: " << e.what() << '\n';
    remove_all(created);
    return 2;
  }
}

}  // namespace v2x
