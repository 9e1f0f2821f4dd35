#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "v2xslice/config.hpp"
#include "v2xslice/metrics.hpp"
#include "v2xslice/simulator.hpp"

namespace v2x {

struct CellSpec {
  std::string scenario;
  Technology technology = Technology::Ns;
  double sigma = 5.0;  // ignored by the direct-RSU technologies
};

std::string sigma_label(const CellSpec& cell);

struct CellResult {
  CellSpec spec;
  std::vector<std::uint64_t> seeds;
  MetricsAccumulator metrics;  // merged over seeds
  std::vector<RunStats> runs;
  double wall_s = 0.0;

  [[nodiscard]] double prr() const { return metrics.safety_prr(); }
  [[nodiscard]] double median_ap_count() const;
  [[nodiscard]] double median_relay_count() const;
};

SimConfig cell_config(const SimConfig& base, const CellSpec& cell, std::uint64_t seed);

CellResult run_cell(const SimConfig& base, const CellSpec& cell,
                    const std::vector<std::uint64_t>& seeds, const LinkModel& model,
                    const TraceSinks& trace = {});

/// Cross product scenarios x technologies x sigmas over seeds base.seed ..
/// base.seed + seed_count - 1. Direct-RSU technologies run once per scenario.
/// Throws ConfigError for empty axes; a failing cell is rethrown with the cell
/// named in the message.
std::vector<CellResult> run_matrix(const SimConfig& base, const std::vector<std::string>& scenarios,
                                   const std::vector<Technology>& technologies,
                                   const std::vector<double>& sigmas, int seed_count,
                                   const LinkModel& model);

// CSV writers; floats use 6 significant digits.
void write_prr_table(std::ostream& out, const std::vector<CellResult>& cells);
void write_throughput_cdf(std::ostream& out, const std::vector<CellResult>& cells, Slice slice,
                          const std::vector<double>& grid_kbps);
void write_summary(std::ostream& out, const std::vector<CellResult>& cells);
void write_run_meta(std::ostream& out, const SimConfig& cfg, const LinkModel& model,
                    const std::vector<CellResult>& cells, double wall_s);

std::string format_g6(double v);

/// Writes every output file of a finished run into `dir`. Returns the paths
/// written.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir,
                                                 const SimConfig& cfg, const LinkModel& model,
                                                 const std::vector<CellResult>& cells,
                                                 double wall_s);

// Command bodies behind the CLI; return the process exit code (0, 1 or 2).
int run_command(const SimConfig& cfg, const std::filesystem::path& out_dir, bool trace,
                std::ostream& log);
int matrix_command(const SimConfig& base, const std::vector<std::string>& scenarios,
                   const std::vector<Technology>& technologies, const std::vector<double>& sigmas,
                   int seed_count, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace v2x
