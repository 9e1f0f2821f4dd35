#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "v2xslice/rng.hpp"

namespace v2x {

enum class Band { V2I, V2V };  // 2 GHz RSU downlink, 5.9 GHz vehicle-to-vehicle

inline constexpr int kRxAntennas = 2;

struct PathlossParams {
  // Macro-to-relay LOS form, d in km.
  double v2i_intercept_db = 100.7;
  double v2i_slope_db = 23.5;
  // V2V LOS form, d in m.
  double v2v_intercept_db = 63.3;
  double v2v_slope_db = 20.0;
  double min_distance_m = 1.0;
};

double pathloss_v2i(double d_m, const PathlossParams& p = {});
double pathloss_v2v(double d_m, const PathlossParams& p = {});

struct LinkBudget {
  double tx_power_dbm = 0.0;
  double pathloss_db = 0.0;
  Band band = Band::V2I;
  double shadowing_db = 0.0;  // log-normal term, unused by default

  [[nodiscard]] double rx_power_dbm() const { return tx_power_dbm - pathloss_db - shadowing_db; }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear);

// Thermal noise over one PRB in mW.
double noise_power_mw(double psd_dbm_hz, double noise_figure_db, double bandwidth_hz);

/// Per-link small-scale fading for one coherence block, N_r x N_PRB gains.
struct FadingRealization {
  int n_rx = 0;
  int n_prb = 0;
  int coherence = 1;  // TTIs remaining before redraw
  std::vector<std::complex<double>> gains;  // antenna-major

  [[nodiscard]] std::complex<double> at(int antenna, int prb) const {
    return gains[static_cast<std::size_t>(antenna) * n_prb + prb];
  }
};

// i.i.d. CN(0,1) entries. Entry k uses counter draws 2k (magnitude) and 2k+1
// (phase) of `rng`, starting from the stream's current position.
FadingRealization draw_fading(RngStream& rng, int n_rx, int n_prb);

// |h|^2 of entry (antenna, prb) of draw_fading(stream, *, n_prb) for a fresh
// stream, without materialising the other entries.
inline double fading_power_at(const RngStream& stream, int antenna, int prb, int n_prb) {
  const auto k = static_cast<std::uint64_t>(antenna) * n_prb + prb;
  return -std::log(stream.uniform_open_at(2 * k));
}

struct SinrReport {
  std::vector<double> per_prb_sinr;  // linear
  Band band = Band::V2I;
};

/// Post-MRC SINR on one PRB: sum over antennas of desired/(interference+noise).
/// `desired` holds received power per antenna, each entry of `interferers`
/// holds one co-band co-PRB transmitter's received power per antenna.
double sinr_mrc(std::span<const double> desired,
                std::span<const std::vector<double>> interferers, double noise_power);

// Same with interference already summed per antenna.
inline double sinr_mrc_summed(std::span<const double> desired,
                              std::span<const double> interference, double noise_power) {
  double s = 0.0;
  for (std::size_t a = 0; a < desired.size(); ++a) s += desired[a] / (interference[a] + noise_power);
  return s;
}

}  // namespace v2x
