#include "v2xslice/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "v2xslice/errors.hpp"

namespace v2x {

double prr(std::span<const ReceptionRecord> records) {
  if (records.empty()) throw std::invalid_argument("prr: no records");
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.intended < 1 || r.successes < 0 || r.successes > r.intended)
      throw std::invalid_argument("prr: malformed reception record");
    sum += static_cast<double>(r.successes) / r.intended;
  }
  return sum / static_cast<double>(records.size());
}

std::vector<CdfPoint> throughput_cdf(std::span<const double> per_vehicle_bits, double duration_s,
                                     std::span<const double> grid_kbps) {
  if (!(duration_s > 0)) throw std::invalid_argument("throughput_cdf: duration must be positive");
  std::vector<double> rates;
  rates.reserve(per_vehicle_bits.size());
  for (double b : per_vehicle_bits) rates.push_back(b / (duration_s * 1000.0));
  return rate_cdf(std::move(rates), grid_kbps);
}

std::vector<CdfPoint> rate_cdf(std::vector<double> rates, std::span<const double> grid_kbps) {
  std::sort(rates.begin(), rates.end());
  const double n = static_cast<double>(rates.size());
  std::vector<CdfPoint> out;
  out.reserve(grid_kbps.size());
  for (double g : grid_kbps) {
    CdfPoint p;
    p.kbps = g;
    if (!rates.empty()) {
      p.cdf = static_cast<double>(std::upper_bound(rates.begin(), rates.end(), g) - rates.begin()) / n;
      p.cdf_left = static_cast<double>(std::lower_bound(rates.begin(), rates.end(), g) - rates.begin()) / n;
    }
    out.push_back(p);
  }
  return out;
}

double target_rate_probability(std::span<const CdfPoint> cdf, double target_kbps) {
  for (const auto& p : cdf)
    if (p.kbps == target_kbps) return 1.0 - p.cdf_left;
  throw std::invalid_argument("target_rate_probability: target not on the CDF grid");
}

std::vector<double> default_kbps_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 4000; ++k) g.push_back(k);
  return g;
}

void MetricsAccumulator::advance_to(std::int64_t now_ms) {
  check_invariant(now_ms >= time_ms_, "metrics time must be monotone");
  time_ms_ = now_ms;
}

void MetricsAccumulator::add_vehicle(Slice slice, VehicleSample sample) {
  check_invariant(sample.delivered_bits >= 0 && sample.window_bits >= 0,
                  "delivered bits must be non-negative");
  (slice == Slice::Safety ? safety_ : video_).push_back(sample);
}

void MetricsAccumulator::add_record(const ReceptionRecord& r) {
  check_invariant(r.intended >= 1 && r.successes >= 0 && r.successes <= r.intended,
                  "reception record out of range");
  records_.push_back(r);
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  if (window_ms_ == 0) window_ms_ = other.window_ms_;
  check_invariant(other.window_ms_ == 0 || other.window_ms_ == window_ms_,
                  "merged runs must share the measurement window");
  time_ms_ += other.time_ms_;
  safety_.insert(safety_.end(), other.safety_.begin(), other.safety_.end());
  video_.insert(video_.end(), other.video_.begin(), other.video_.end());
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::int64_t MetricsAccumulator::total_delivered_bits(Slice slice) const {
  std::int64_t s = 0;
  for (const auto& v : samples(slice)) s += v.delivered_bits;
  return s;
}

double MetricsAccumulator::safety_prr() const {
  return records_.empty() ? 0.0 : prr(records_);
}

std::vector<CdfPoint> MetricsAccumulator::cdf(Slice slice, std::span<const double> grid_kbps) const {
  check_invariant(window_ms_ > 0, "throughput window not set");
  std::vector<double> rates;
  for (const auto& v : samples(slice))
    rates.push_back(static_cast<double>(v.window_bits) / static_cast<double>(window_ms_));
  return rate_cdf(std::move(rates), grid_kbps);
}

double MetricsAccumulator::target_probability(Slice slice, double target_kbps) const {
  const double grid[] = {target_kbps};
  return target_rate_probability(cdf(slice, grid), target_kbps);
}

}  // namespace v2x
