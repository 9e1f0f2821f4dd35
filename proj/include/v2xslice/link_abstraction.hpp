#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2xslice/rng.hpp"

namespace v2x {

struct McsEntry {
  int index = 0;
  int modulation_order = 2;  // bits per symbol: 2, 4 or 6
  double code_rate = 0.0;
  double spectral_efficiency = 0.0;  // bits/symbol
  double bler_ref_sinr_db = 0.0;     // effective SINR at 10% BLER
};

inline constexpr const char* kMcsCsvVersion = "# v2xslice-mcs-table v1";
inline constexpr const char* kMiCsvVersion = "# v2xslice-mi-curves v1";

class McsTable {
 public:
  McsTable() = default;
  explicit McsTable(std::vector<McsEntry> entries);

  static McsTable load(const std::filesystem::path& path);
  static McsTable parse(std::istream& in);
  // The 15-entry LTE-A style table also shipped as data/mcs_table_v1.csv.
  static McsTable builtin();

  void write(std::ostream& out) const;

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const McsEntry& at(int index) const { return entries_.at(static_cast<std::size_t>(index)); }
  [[nodiscard]] std::span<const McsEntry> entries() const { return entries_; }

 private:
  std::vector<McsEntry> entries_;
};

// Modulation order to slot 0/1/2 in per-modulation arrays.
inline int modulation_slot(int order) { return order / 2 - 1; }

/// Bit-interleaved coded modulation capacity of Gray-labelled square QAM
/// (order 2, 4, 6) over AWGN, bits per complex symbol.
double bicm_capacity(int modulation_order, double snr_linear);

/// Tabulated mutual-information curves on a uniform dB grid.
///
/// Between 0 and the first grid point the curve is linear in linear SINR so
/// that I(0) = 0; above the grid it holds the last value.
class MiCurves {
 public:
  MiCurves() = default;
  MiCurves(double start_db, double step_db, std::array<std::vector<double>, 3> values);

  static MiCurves load(const std::filesystem::path& path);
  static MiCurves parse(std::istream& in);
  static MiCurves compute(double start_db = -20.0, double end_db = 40.0, double step_db = 0.1);

  void write(std::ostream& out) const;

  [[nodiscard]] double mutual_information(double sinr_linear, int modulation_order) const;
  // Same, with the dB value already known; sinr_linear must be > 0.
  [[nodiscard]] double mutual_information_db(double db, double sinr_linear,
                                             int modulation_order) const;
  // Smallest SINR with I(SINR) = mi; mi is clamped to [0, I(max)].
  [[nodiscard]] double inverse(double mi, int modulation_order) const;

  [[nodiscard]] double start_db() const { return start_db_; }
  [[nodiscard]] double end_db() const { return start_db_ + step_db_ * (points() - 1); }
  [[nodiscard]] double step_db() const { return step_db_; }
  [[nodiscard]] std::size_t points() const { return values_[0].size(); }
  [[nodiscard]] std::span<const double> curve(int modulation_order) const {
    return values_[modulation_slot(modulation_order)];
  }

 private:
  double start_db_ = -20.0;
  double step_db_ = 0.1;
  std::array<std::vector<double>, 3> values_;
};

/// MIESM: I^-1(mean I(sinr_prb)), clamped to [min, max] of the inputs so the
/// flat saturated part of the curve cannot move the result outside them.
double miesm_effective_sinr(std::span<const double> per_prb_sinr, int modulation_order,
                            const MiCurves& curves);

struct BlerCurve {
  double slope_per_db = 2.0;
};

// Logistic BLER with BLER(bler_ref_sinr_db) = 0.1.
double bler(double effective_sinr_db, const McsEntry& mcs, const BlerCurve& curve = {});

// Effective SINR per modulation order (slot 0/1/2) for one link.
struct CqiReport {
  std::array<double, 3> effective_sinr_db{};
};

CqiReport make_cqi(std::span<const double> per_prb_sinr, const MiCurves& curves);

// Highest MCS whose BLER at the reported SINR is <= 0.1, else index 0.
const McsEntry& select_mcs(double cqi_effective_sinr_db, const McsTable& table);
const McsEntry& select_mcs(const CqiReport& report, const McsTable& table);

inline constexpr int kMaxHarqAttempts = 4;

struct HarqProcess {
  std::int64_t tb_id = 0;
  int mcs_index = 0;
  int attempt = 0;  // transmissions combined so far
  std::vector<double> accumulated_sinr;  // per PRB, linear
};

/// Chase combining: adds the new per-PRB SINR to the accumulated energy.
/// Returns nullopt when the process has already used `max_attempts`
/// transmissions, i.e. the block is dropped.
std::optional<HarqProcess> harq_combine(HarqProcess proc, std::span<const double> new_per_prb_sinr,
                                        int max_attempts = kMaxHarqAttempts);

enum class DecodeResult { Ack, Nack };

DecodeResult decode_attempt(RngStream& rng, double bler_prob);

}  // namespace v2x
