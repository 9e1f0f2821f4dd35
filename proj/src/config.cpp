#include "v2xslice/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "v2xslice/errors.hpp"

#ifndef V2XSLICE_DATA_DIR
#define V2XSLICE_DATA_DIR "data"
#endif

namespace v2x {

namespace fs = std::filesystem;

const char* technology_name(Technology t) {
  switch (t) {
    case Technology::Rsu: return "rsu";
    case Technology::RsuRelay: return "rsu_relay";
    case Technology::Ns: return "ns";
    case Technology::NsRelay: return "ns_relay";
  }
  return "?";
}

Technology parse_technology(const std::string& s) {
  if (s == "rsu") return Technology::Rsu;
  if (s == "rsu_relay") return Technology::RsuRelay;
  if (s == "ns") return Technology::Ns;
  if (s == "ns_relay") return Technology::NsRelay;
  throw ConfigError("technology: unknown value '" + s + "' (rsu, rsu_relay, ns, ns_relay)");
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

fs::path to_path(const std::string& v, const fs::path& base) {
  fs::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

struct Field {
  const char* key;
  std::function<void(SimConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const SimConfig&)> get;
};

#define V2X_DOUBLE(name, member)                                                        \
  Field {                                                                               \
    name, [](SimConfig& c, const std::string& v, const fs::path&) {                     \
      c.member = to_double(name, v);                                                    \
    },                                                                                  \
        [](const SimConfig& c) { return fmt_double(c.member); }                         \
  }
#define V2X_INT(name, member)                                                           \
  Field {                                                                               \
    name, [](SimConfig& c, const std::string& v, const fs::path&) {                     \
      c.member = static_cast<decltype(c.member)>(to_int(name, v));                      \
    },                                                                                  \
        [](const SimConfig& c) { return std::to_string(c.member); }                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"seed", [](SimConfig& c, const std::string& v, const fs::path&) { c.seed = to_uint("seed", v); },
       [](const SimConfig& c) { return std::to_string(c.seed); }},
      {"scenario",
       [](SimConfig& c, const std::string& v, const fs::path&) {
         c.layout.band = parse_scenario(v);
         c.scenario = v;
       },
       [](const SimConfig& c) { return c.scenario; }},
      {"technology",
       [](SimConfig& c, const std::string& v, const fs::path&) { c.technology = parse_technology(v); },
       [](const SimConfig& c) { return std::string(technology_name(c.technology)); }},
      V2X_INT("duration_ms", duration_ms),
      V2X_INT("tti_ms", tti_ms),
      V2X_DOUBLE("highway_length_m", layout.highway_length),
      V2X_INT("lane_count", layout.lane_count),
      V2X_DOUBLE("lane_width_m", layout.lane_width),
      V2X_DOUBLE("rsu_spacing_m", layout.rsu_spacing),
      V2X_DOUBLE("rsu_offset_m", layout.rsu_offset),
      {"speed_kmh",
       [](SimConfig& c, const std::string& v, const fs::path&) {
         c.layout.speed_mps = to_double("speed_kmh", v) / 3.6;
       },
       [](const SimConfig& c) { return fmt_double(c.layout.speed_mps * 3.6); }},
      V2X_DOUBLE("video_fraction", layout.video_fraction),
      V2X_DOUBLE("sigma_m", slicing.sigma),
      V2X_INT("e_max_cap", slicing.e_max_cap),
      V2X_INT("kmeans_restarts", slicing.kmeans_restarts),
      V2X_INT("reslice_period_ms", slicing.reslice_period_ms),
      V2X_DOUBLE("eligibility_threshold_db", eligibility_threshold_db),
      V2X_DOUBLE("low_sinr_threshold_db", relay.low_sinr_threshold_db),
      V2X_DOUBLE("relay_range_m", relay.max_range_m),
      V2X_INT("relay_max_clients", relay.max_clients),
      V2X_DOUBLE("relay_kappa_db_per_m", relay.kappa_db_per_m),
      V2X_DOUBLE("v2i_tx_power_dbm", v2i_tx_power_dbm),
      V2X_DOUBLE("v2v_tx_power_dbm", v2v_tx_power_dbm),
      V2X_INT("prb_count", prb_count),
      V2X_DOUBLE("prb_bandwidth_hz", prb_bandwidth_hz),
      V2X_DOUBLE("noise_psd_dbm_hz", noise_psd_dbm_hz),
      V2X_DOUBLE("noise_figure_db", noise_figure_db),
      V2X_DOUBLE("v2i_pl_intercept_db", pathloss.v2i_intercept_db),
      V2X_DOUBLE("v2i_pl_slope_db", pathloss.v2i_slope_db),
      V2X_DOUBLE("v2v_pl_intercept_db", pathloss.v2v_intercept_db),
      V2X_DOUBLE("v2v_pl_slope_db", pathloss.v2v_slope_db),
      V2X_INT("coherence_ttis", coherence_ttis),
      V2X_INT("harq_max_attempts", harq_max_attempts),
      V2X_INT("harq_rtt_ms", harq_rtt_ms),
      V2X_DOUBLE("bler_slope_per_db", bler_slope_per_db),
      V2X_DOUBLE("overhead", overhead),
      V2X_DOUBLE("pf_alpha", pf_alpha),
      V2X_INT("drain_ms", drain_ms),
      V2X_INT("prr_window_ms", prr_window_ms),
      V2X_DOUBLE("locality_radius_m", locality_radius_m),
      {"mcs_table",
       [](SimConfig& c, const std::string& v, const fs::path& b) { c.mcs_table = to_path(v, b); },
       [](const SimConfig& c) { return resolved_mcs_path(c).string(); }},
      {"mi_curves",
       [](SimConfig& c, const std::string& v, const fs::path& b) { c.mi_curves = to_path(v, b); },
       [](const SimConfig& c) { return resolved_mi_path(c).string(); }},
      {"mcs_table_sha256",
       [](SimConfig& c, const std::string& v, const fs::path&) { c.mcs_table_sha256 = v; },
       [](const SimConfig& c) { return c.mcs_table_sha256; }},
      {"mi_curves_sha256",
       [](SimConfig& c, const std::string& v, const fs::path&) { c.mi_curves_sha256 = v; },
       [](const SimConfig& c) { return c.mi_curves_sha256; }},
  };
  return f;
}

#undef V2X_DOUBLE
#undef V2X_INT

}  // namespace

DensityBand parse_scenario(const std::string& s) {
  if (s == "s1") return {1.0, 100.0};
  if (s == "s2") return {100.0, 200.0};
  if (s == "s3") return {200.0, 300.0};
  const auto dash = s.find('-', 1);
  if (dash == std::string::npos)
    throw ConfigError("scenario: expected s1, s2, s3 or <d_min>-<d_max>, got '" + s + "'");
  DensityBand b{to_double("scenario", s.substr(0, dash)), to_double("scenario", s.substr(dash + 1))};
  if (!(b.d_min < b.d_max) || b.d_min < 0)
    throw ConfigError("scenario: band '" + s + "' needs 0 <= d_min < d_max");
  return b;
}

std::string scenario_label(const DensityBand& band) {
  return fmt_double(band.d_min) + "-" + fmt_double(band.d_max);
}

double SimConfig::v2i_tx_per_prb_mw() const {
  return db_to_linear(v2i_tx_power_dbm) / prb_count;
}

double SimConfig::v2v_tx_per_prb_mw() const {
  return db_to_linear(v2v_tx_power_dbm) / prb_count;
}

double SimConfig::noise_per_prb_mw() const {
  return noise_power_mw(noise_psd_dbm_hz, noise_figure_db, prb_bandwidth_hz);
}

void SimConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(tti_ms == 1, "tti_ms: only 1 ms TTIs are supported");
  need(slicing.reslice_period_ms > 0, "reslice_period_ms must be positive");
  need(duration_ms > 0, "duration_ms must be positive");
  need(duration_ms % slicing.reslice_period_ms == 0,
       "duration_ms must be a multiple of reslice_period_ms");
  need(layout.band.d_min < layout.band.d_max, "scenario: d_min must be below d_max");
  need(layout.highway_length > 0 && layout.highway_length >= layout.band.d_max,
       "highway_length_m must exceed one inter-vehicle gap");
  need(layout.lane_count >= 1, "lane_count must be positive");
  need(layout.rsu_spacing > 0, "rsu_spacing_m must be positive");
  need(layout.speed_mps >= 0, "speed_kmh must be non-negative");
  need(layout.video_fraction > 0 && layout.video_fraction <= 1, "video_fraction must lie in (0, 1]");
  need(slicing.sigma > 0, "sigma_m must be positive");
  need(slicing.e_max_cap >= 1, "e_max_cap must be positive");
  need(slicing.kmeans_restarts >= 1, "kmeans_restarts must be positive");
  need(relay.max_range_m > 0, "relay_range_m must be positive");
  need(relay.max_clients >= 1, "relay_max_clients must be positive");
  need(relay.kappa_db_per_m > 0, "relay_kappa_db_per_m must be positive");
  need(prb_count >= 1 && prb_count <= 1000, "prb_count must lie in [1, 1000]");
  need(prb_bandwidth_hz > 0, "prb_bandwidth_hz must be positive");
  need(coherence_ttis >= 1, "coherence_ttis must be positive");
  need(harq_max_attempts >= 1, "harq_max_attempts must be positive");
  need(harq_rtt_ms >= 1, "harq_rtt_ms must be positive");
  need(bler_slope_per_db > 0, "bler_slope_per_db must be positive");
  need(overhead >= 0 && overhead < 1, "overhead must lie in [0, 1)");
  need(pf_alpha > 0 && pf_alpha <= 1, "pf_alpha must lie in (0, 1]");
  need(drain_ms >= 0 && drain_ms < duration_ms, "drain_ms must lie in [0, duration_ms)");
  need(prr_window_ms >= 1, "prr_window_ms must be positive");
  need(locality_radius_m >= 0, "locality_radius_m must be non-negative");
  for (const auto& [key, path, pin] :
       {std::tuple{"mcs_table", resolved_mcs_path(*this), mcs_table_sha256},
        std::tuple{"mi_curves", resolved_mi_path(*this), mi_curves_sha256}}) {
    need(fs::is_regular_file(path), std::string(key) + ": data file not found: " + path.string());
    if (!pin.empty() && sha256_file(path) != pin)
      throw ConfigError(std::string(key) + ": SHA-256 of " + path.string() + " does not match the pin");
  }
}

std::vector<std::pair<std::string, std::string>> SimConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void apply_config_key(SimConfig& cfg, const std::string& key, const std::string& value,
                      const fs::path& base_dir) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value, base_dir);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

SimConfig parse_config_text(const std::string& text, const fs::path& base_dir) {
  SimConfig cfg;
  cfg.layout.band = parse_scenario(cfg.scenario);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ConfigError("duplicate config key '" + key + "'");
    seen.push_back(key);
    apply_config_key(cfg, key, value, base_dir);
  }
  return cfg;
}

SimConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

// V2XSLICE_DATA_DIR in the environment wins over the build-time path, so an
// installed package can point at its own copy.
fs::path default_data_dir() {
  if (const char* env = std::getenv("V2XSLICE_DATA_DIR"); env != nullptr && *env != '\0') return fs::path(env);
  return fs::path(V2XSLICE_DATA_DIR);
}

fs::path resolved_mcs_path(const SimConfig& cfg) {
  return cfg.mcs_table.empty() ? default_data_dir() / "mcs_table_v1.csv" : cfg.mcs_table;
}

fs::path resolved_mi_path(const SimConfig& cfg) {
  return cfg.mi_curves.empty() ? default_data_dir() / "mi_curves_v1.csv" : cfg.mi_curves;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace v2x
