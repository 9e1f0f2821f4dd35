#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace v2x {

enum class Slice { Safety, Video };

struct ReceptionRecord {
  std::int64_t packet_id = 0;
  Slice slice = Slice::Safety;
  int intended = 1;   // receivers in the packet's locality
  int successes = 0;  // of those, decoded within the deadline
};

// Mean over packets of successes / intended. Throws on an empty list.
double prr(std::span<const ReceptionRecord> records);

struct CdfPoint {
  double kbps = 0.0;
  double cdf = 0.0;       // P(rate <= kbps)
  double cdf_left = 0.0;  // P(rate < kbps)
};

/// Empirical CDF of per-vehicle average rate (bits / duration) on `grid_kbps`.
/// An empty sample gives an all-zero CDF.
std::vector<CdfPoint> throughput_cdf(std::span<const double> per_vehicle_bits, double duration_s,
                                     std::span<const double> grid_kbps);

// Same on per-vehicle rates already in kbps.
std::vector<CdfPoint> rate_cdf(std::vector<double> rates_kbps, std::span<const double> grid_kbps);

// 1 - CDF(target-). Throws std::invalid_argument if target is not a grid point.
double target_rate_probability(std::span<const CdfPoint> cdf, double target_kbps);

// 0, 1, ..., 4000 kbps.
std::vector<double> default_kbps_grid();

struct VehicleSample {
  int vehicle_id = 0;
  std::int64_t delivered_bits = 0;  // everything delivered during the run
  std::int64_t window_bits = 0;     // delivered bits of packets generated inside the window
};

/// Per-run outcome store; accumulators from different seeds merge by
/// concatenation.
class MetricsAccumulator {
 public:
  // Throughput window; rates are window bits / window_ms, exact in kbps.
  void set_window_ms(std::int64_t window_ms) { window_ms_ = window_ms; }
  void advance_to(std::int64_t now_ms);

  void add_vehicle(Slice slice, VehicleSample sample);
  void add_record(const ReceptionRecord& r);
  void merge(const MetricsAccumulator& other);

  [[nodiscard]] std::int64_t time_ms() const { return time_ms_; }
  [[nodiscard]] std::int64_t window_ms() const { return window_ms_; }
  [[nodiscard]] const std::vector<ReceptionRecord>& records() const { return records_; }
  [[nodiscard]] const std::vector<VehicleSample>& samples(Slice slice) const {
    return slice == Slice::Safety ? safety_ : video_;
  }
  [[nodiscard]] std::int64_t total_delivered_bits(Slice slice) const;

  [[nodiscard]] double safety_prr() const;
  [[nodiscard]] std::vector<CdfPoint> cdf(Slice slice, std::span<const double> grid_kbps) const;
  [[nodiscard]] double target_probability(Slice slice, double target_kbps) const;

 private:
  std::int64_t time_ms_ = 0;
  std::int64_t window_ms_ = 0;
  std::vector<VehicleSample> safety_;
  std::vector<VehicleSample> video_;
  std::vector<ReceptionRecord> records_;
};

}  // namespace v2x
