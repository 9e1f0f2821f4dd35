#include "v2xslice/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace v2x {

double pathloss_v2i(double d_m, const PathlossParams& p) {
  const double d = std::max(d_m, p.min_distance_m);
  return p.v2i_intercept_db + p.v2i_slope_db * std::log10(d / 1000.0);
}

double pathloss_v2v(double d_m, const PathlossParams& p) {
  const double d = std::max(d_m, p.min_distance_m);
  return p.v2v_intercept_db + p.v2v_slope_db * std::log10(d);
}

double linear_to_db(double linear) {
  if (linear <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(linear);
}

double noise_power_mw(double psd_dbm_hz, double noise_figure_db, double bandwidth_hz) {
  return db_to_linear(psd_dbm_hz + noise_figure_db + 10.0 * std::log10(bandwidth_hz));
}

FadingRealization draw_fading(RngStream& rng, int n_rx, int n_prb) {
  FadingRealization f;
  f.n_rx = n_rx;
  f.n_prb = n_prb;
  const auto n = static_cast<std::size_t>(n_rx) * n_prb;
  f.gains.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double power = -std::log(rng.uniform_open());
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    f.gains.push_back(std::polar(std::sqrt(power), phase));
  }
  return f;
}

double sinr_mrc(std::span<const double> desired,
                std::span<const std::vector<double>> interferers, double noise_power) {
  double s = 0.0;
  for (std::size_t a = 0; a < desired.size(); ++a) {
    double i = 0.0;
    for (const auto& intf : interferers) i += intf[a];
    s += desired[a] / (i + noise_power);
  }
  return s;
}

}  // namespace v2x
