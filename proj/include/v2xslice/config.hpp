#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "v2xslice/channel.hpp"
#include "v2xslice/relaying.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/slicing.hpp"

namespace v2x {

enum class Technology { Rsu, RsuRelay, Ns, NsRelay };

const char* technology_name(Technology t);
Technology parse_technology(const std::string& s);  // throws ConfigError
inline bool uses_slicing(Technology t) { return t == Technology::Ns || t == Technology::NsRelay; }
inline bool uses_relaying(Technology t) {
  return t == Technology::RsuRelay || t == Technology::NsRelay;
}

// "s1" / "s2" / "s3" or "<d_min>-<d_max>" in metres.
DensityBand parse_scenario(const std::string& s);
std::string scenario_label(const DensityBand& band);

struct SimConfig {
  std::uint64_t seed = 1;
  std::string scenario = "s1";
  Technology technology = Technology::Ns;
  std::int64_t duration_ms = 10000;
  std::int64_t tti_ms = 1;

  HighwayLayout layout;  // band filled from `scenario`
  SlicingParams slicing;
  // The geometric wideband SINR never falls below ~3 dB on this layout, so a
  // 0 dB low-SINR cutoff would relay nobody; both cutoffs sit higher here.
  double eligibility_threshold_db = 8.0;
  RelayParams relay{.low_sinr_threshold_db = 5.0};

  double v2i_tx_power_dbm = 46.0;
  double v2v_tx_power_dbm = 20.0;
  int prb_count = 50;
  double prb_bandwidth_hz = 180e3;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  PathlossParams pathloss;
  int coherence_ttis = 1;

  int harq_max_attempts = 4;
  int harq_rtt_ms = 8;
  double bler_slope_per_db = 2.0;
  double overhead = 0.25;
  double pf_alpha = 0.01;

  std::int64_t drain_ms = 100;       // tail excluded from throughput/PRR windows
  std::int64_t prr_window_ms = 100;  // PRR grouping period per transmitter
  double locality_radius_m = 0.0;    // 0 = every intended receiver counts

  std::filesystem::path mcs_table;   // empty = bundled data file
  std::filesystem::path mi_curves;
  std::string mcs_table_sha256;      // optional pin, checked when non-empty
  std::string mi_curves_sha256;

  [[nodiscard]] double v2i_tx_per_prb_mw() const;
  [[nodiscard]] double v2v_tx_per_prb_mw() const;
  [[nodiscard]] double noise_per_prb_mw() const;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // key = value lines, every key, in a fixed order.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> echo() const;
};

/// INI-style `key = value` file; '#' and ';' start comments, [section]
/// headers are ignored. Unknown keys and malformed values raise ConfigError
/// with the key name. Relative data paths resolve against the file's folder.
SimConfig parse_config(const std::filesystem::path& path);
SimConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir = {});
// Applies one key; shared by the parser and the command line overrides.
void apply_config_key(SimConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir = {});

std::filesystem::path default_data_dir();
std::filesystem::path resolved_mcs_path(const SimConfig& cfg);
std::filesystem::path resolved_mi_path(const SimConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace v2x
