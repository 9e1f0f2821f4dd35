#include "v2xslice/link_abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "v2xslice/channel.hpp"
#include "v2xslice/errors.hpp"

namespace v2x {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": cannot parse number '" + s + "'");
  }
}

// Shortest of %.10g / %.17g that reads back to the same double.
std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_order(int m) {
  if (m != 2 && m != 4 && m != 6) throw ConfigError("modulation order must be 2, 4 or 6");
}

}  // namespace

// ---------------------------------------------------------------- MCS table

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("mcs table is empty");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.index != static_cast<int>(i)) throw ConfigError("mcs table: indices must be 0..n-1 in order");
    check_order(e.modulation_order);
    if (!(e.code_rate > 0.0 && e.code_rate < 1.0)) throw ConfigError("mcs table: code_rate outside (0,1)");
    if (i > 0) {
      const auto& p = entries_[i - 1];
      if (!(e.spectral_efficiency > p.spectral_efficiency))
        throw ConfigError("mcs table: spectral_efficiency must increase with index");
      if (!(e.bler_ref_sinr_db > p.bler_ref_sinr_db))
        throw ConfigError("mcs table: bler_ref_sinr_db must increase with index");
    }
  }
}

McsTable McsTable::builtin() {
  // LTE 4-bit CQI table code rates (x1024) and efficiencies; 10% BLER points
  // every 1.9 dB from -6.5 dB.
  static constexpr struct {
    int m;
    int rate1024;
    double eff;
  } rows[] = {{2, 78, 0.1523},  {2, 120, 0.2344}, {2, 193, 0.3770}, {2, 308, 0.6016},
              {2, 449, 0.8770}, {2, 602, 1.1758}, {4, 378, 1.4766}, {4, 490, 1.9141},
              {4, 616, 2.4063}, {6, 466, 2.7305}, {6, 567, 3.3223}, {6, 666, 3.9023},
              {6, 772, 4.5234}, {6, 873, 5.1152}, {6, 948, 5.5547}};
  std::vector<McsEntry> e;
  for (int i = 0; i < 15; ++i) {
    e.push_back({i, rows[i].m, rows[i].rate1024 / 1024.0, rows[i].eff,
                 std::round((-6.5 + 1.9 * i) * 10.0) / 10.0});
  }
  return McsTable(std::move(e));
}

McsTable McsTable::parse(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMcsCsvVersion)
    throw ConfigError("mcs table: missing or unsupported version line");
  if (!std::getline(in, line) ||
      line != "index,modulation_order,code_rate,spectral_efficiency,bler_ref_sinr_db")
    throw ConfigError("mcs table: unexpected header");
  std::vector<McsEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto c = split_csv(line);
    if (c.size() != 5) throw ConfigError("mcs table: expected 5 columns in '" + line + "'");
    McsEntry e;
    e.index = static_cast<int>(to_double(c[0], "mcs table"));
    e.modulation_order = static_cast<int>(to_double(c[1], "mcs table"));
    e.code_rate = to_double(c[2], "mcs table");
    e.spectral_efficiency = to_double(c[3], "mcs table");
    e.bler_ref_sinr_db = to_double(c[4], "mcs table");
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

McsTable McsTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mcs table '" + path.string() + "'");
  return parse(in);
}

void McsTable::write(std::ostream& out) const {
  out << kMcsCsvVersion << '\n'
      << "index,modulation_order,code_rate,spectral_efficiency,bler_ref_sinr_db\n";
  for (const auto& e : entries_) {
    out << e.index << ',' << e.modulation_order << ',' << fmt_exact(e.code_rate) << ','
        << fmt_exact(e.spectral_efficiency) << ',' << fmt_exact(e.bler_ref_sinr_db) << '\n';
  }
}

// ---------------------------------------------------------------- MI curves

double bicm_capacity(int modulation_order, double snr_linear) {
  check_order(modulation_order);
  if (snr_linear <= 0.0) return 0.0;
  // Gray-labelled square QAM splits into two independent sqrt(M)-PAM
  // components, each with unit energy and noise variance 1/snr.
  const int bits = modulation_order / 2;
  const int levels = 1 << bits;
  const double delta = std::sqrt(3.0 / (levels * levels - 1.0));
  std::vector<double> amp(levels);
  std::vector<int> label(levels);
  for (int j = 0; j < levels; ++j) {
    amp[j] = (2.0 * j - levels + 1) * delta;
    label[j] = j ^ (j >> 1);
  }
  const double sigma = std::sqrt(1.0 / snr_linear);
  // Trapezoid over the noise density on +-10 sigma; the integrand is smooth
  // so the rule converges spectrally.
  constexpr int kNodes = 4001;
  constexpr double kSpan = 10.0;
  const double h = 2.0 * kSpan / (kNodes - 1);
  std::vector<double> metric(levels);

  double loss = 0.0;  // E[log2(sum_all / sum_matching)] summed over bits
  for (int j = 0; j < levels; ++j) {
    double acc = 0.0;
    for (int n = 0; n < kNodes; ++n) {
      const double z = -kSpan + n * h;
      const double w = (n == 0 || n == kNodes - 1 ? 0.5 : 1.0) * h *
                       std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      const double y = amp[j] + sigma * z;
      double mmax = -std::numeric_limits<double>::infinity();
      for (int q = 0; q < levels; ++q) {
        const double d = (y - amp[q]) / sigma;
        metric[q] = -0.5 * d * d;
        mmax = std::max(mmax, metric[q]);
      }
      double all = 0.0;
      for (int q = 0; q < levels; ++q) all += std::exp(metric[q] - mmax);
      double term = 0.0;
      for (int b = 0; b < bits; ++b) {
        const int sent = (label[j] >> b) & 1;
        double match = 0.0;
        for (int q = 0; q < levels; ++q)
          if (((label[q] >> b) & 1) == sent) match += std::exp(metric[q] - mmax);
        term += std::log2(all / match);
      }
      acc += w * term;
    }
    loss += acc / levels;
  }
  const double pam = std::clamp(bits - loss, 0.0, static_cast<double>(bits));
  return 2.0 * pam;
}

MiCurves::MiCurves(double start_db, double step_db, std::array<std::vector<double>, 3> values)
    : start_db_(start_db), step_db_(step_db), values_(std::move(values)) {
  if (!(step_db_ > 0)) throw ConfigError("mi curves: grid step must be positive");
  const std::size_t n = values_[0].size();
  if (n < 2) throw ConfigError("mi curves: need at least two grid points");
  for (int s = 0; s < 3; ++s) {
    const auto& v = values_[s];
    if (v.size() != n) throw ConfigError("mi curves: columns differ in length");
    const double m = 2.0 * (s + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(v[i] >= 0.0 && v[i] <= m)) throw ConfigError("mi curves: value outside [0, m]");
      if (i > 0 && v[i] < v[i - 1]) throw ConfigError("mi curves: curve must be non-decreasing");
    }
    if (!(v[0] > 0.0)) throw ConfigError("mi curves: first grid value must be positive");
  }
}

MiCurves MiCurves::compute(double start_db, double end_db, double step_db) {
  const auto n = static_cast<std::size_t>(std::llround((end_db - start_db) / step_db)) + 1;
  std::array<std::vector<double>, 3> v;
  for (int s = 0; s < 3; ++s) {
    const int m = 2 * (s + 1);
    v[s].resize(n);
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Round the grid to 1e-9 dB so every implementation evaluates the same SNRs.
      const double db = std::round((start_db + static_cast<double>(i) * step_db) * 1e9) / 1e9;
      double c = bicm_capacity(m, db_to_linear(db));
      if (m - c < 1e-12) c = m;
      running = std::max(running, c);
      v[s][i] = running;
    }
  }
  return MiCurves(start_db, step_db, std::move(v));
}

MiCurves MiCurves::parse(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMiCsvVersion)
    throw ConfigError("mi curves: missing or unsupported version line");
  if (!std::getline(in, line) || line != "snr_db,qpsk,qam16,qam64")
    throw ConfigError("mi curves: unexpected header");
  std::vector<double> grid;
  std::array<std::vector<double>, 3> v;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto c = split_csv(line);
    if (c.size() != 4) throw ConfigError("mi curves: expected 4 columns in '" + line + "'");
    grid.push_back(to_double(c[0], "mi curves"));
    for (int s = 0; s < 3; ++s) v[s].push_back(to_double(c[s + 1], "mi curves"));
  }
  if (grid.size() < 2) throw ConfigError("mi curves: need at least two grid points");
  const double step = grid[1] - grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i] - grid[0] - step * static_cast<double>(i)) > 1e-6)
      throw ConfigError("mi curves: snr grid must be uniform");
  }
  return MiCurves(grid[0], step, std::move(v));
}

MiCurves MiCurves::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mi curves '" + path.string() + "'");
  return parse(in);
}

void MiCurves::write(std::ostream& out) const {
  out << kMiCsvVersion << '\n' << "snr_db,qpsk,qam16,qam64\n";
  char buf[128];
  for (std::size_t i = 0; i < points(); ++i) {
    const double db = start_db_ + step_db_ * static_cast<double>(i);
    std::snprintf(buf, sizeof buf, "%.1f,%.15g,%.15g,%.15g\n", db, values_[0][i], values_[1][i],
                  values_[2][i]);
    out << buf;
  }
}

double MiCurves::mutual_information(double sinr_linear, int modulation_order) const {
  if (!(sinr_linear > 0.0)) return 0.0;
  return mutual_information_db(10.0 * std::log10(sinr_linear), sinr_linear, modulation_order);
}

double MiCurves::mutual_information_db(double db, double sinr_linear, int modulation_order) const {
  const auto& v = values_[modulation_slot(modulation_order)];
  const double pos = (db - start_db_) / step_db_;
  if (pos <= 0.0) return v.front() * sinr_linear / db_to_linear(start_db_);
  const auto last = static_cast<double>(v.size() - 1);
  if (pos >= last) return v.back();
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  return v[i] + t * (v[i + 1] - v[i]);
}

double MiCurves::inverse(double mi, int modulation_order) const {
  const auto& v = values_[modulation_slot(modulation_order)];
  if (!(mi > 0.0)) return 0.0;
  if (mi <= v.front()) return db_to_linear(start_db_) * mi / v.front();
  if (mi >= v.back()) mi = v.back();
  // first grid point with value >= mi; v[i-1] < mi there
  const auto it = std::lower_bound(v.begin(), v.end(), mi);
  const auto i = static_cast<std::size_t>(it - v.begin());
  const double t = (mi - v[i - 1]) / (v[i] - v[i - 1]);
  const double db = start_db_ + (static_cast<double>(i - 1) + t) * step_db_;
  return db_to_linear(db);
}

double miesm_effective_sinr(std::span<const double> per_prb_sinr, int modulation_order,
                            const MiCurves& curves) {
  if (per_prb_sinr.empty()) throw std::invalid_argument("miesm: empty SINR list");
  double lo = per_prb_sinr[0], hi = per_prb_sinr[0], sum = 0.0;
  for (double s : per_prb_sinr) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    sum += curves.mutual_information(s, modulation_order);
  }
  if (lo == hi) return lo;
  const double eff =
      curves.inverse(sum / static_cast<double>(per_prb_sinr.size()), modulation_order);
  return std::clamp(eff, lo, hi);
}

// ------------------------------------------------------------- BLER and MCS

double bler(double effective_sinr_db, const McsEntry& mcs, const BlerCurve& curve) {
  // 1/(1 + 9 e^{s(g - ref)}) is 0.1 at g = ref
  static const double kLn9 = std::log(9.0);
  const double x = curve.slope_per_db * (effective_sinr_db - mcs.bler_ref_sinr_db) + kLn9;
  if (x > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(x));
}

CqiReport make_cqi(std::span<const double> per_prb_sinr, const MiCurves& curves) {
  if (per_prb_sinr.empty()) throw std::invalid_argument("miesm: empty SINR list");
  // same as miesm_effective_sinr per order, with the log taken once per PRB
  thread_local std::vector<double> db;
  db.resize(per_prb_sinr.size());
  double lo = per_prb_sinr[0], hi = per_prb_sinr[0];
  for (std::size_t i = 0; i < per_prb_sinr.size(); ++i) {
    const double s = per_prb_sinr[i];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    db[i] = s > 0.0 ? 10.0 * std::log10(s) : 0.0;
  }
  CqiReport r;
  for (int s = 0; s < 3; ++s) {
    const int order = 2 * (s + 1);
    double eff = lo;
    if (lo != hi) {
      double sum = 0.0;
      for (std::size_t i = 0; i < db.size(); ++i) {
        if (per_prb_sinr[i] > 0.0) sum += curves.mutual_information_db(db[i], per_prb_sinr[i], order);
      }
      eff = std::clamp(curves.inverse(sum / static_cast<double>(db.size()), order), lo, hi);
    }
    r.effective_sinr_db[s] = 10.0 * std::log10(eff);
  }
  return r;
}

const McsEntry& select_mcs(const CqiReport& report, const McsTable& table) {
  // bler(g, e) <= 0.1 exactly when g >= e.bler_ref_sinr_db; comparing the
  // thresholds avoids rounding at the boundary.
  const auto entries = table.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (report.effective_sinr_db[modulation_slot(it->modulation_order)] >= it->bler_ref_sinr_db)
      return *it;
  }
  return entries.front();
}

const McsEntry& select_mcs(double cqi_effective_sinr_db, const McsTable& table) {
  CqiReport r;
  r.effective_sinr_db.fill(cqi_effective_sinr_db);
  return select_mcs(r, table);
}

// ---------------------------------------------------------------- HARQ

std::optional<HarqProcess> harq_combine(HarqProcess proc, std::span<const double> new_per_prb_sinr,
                                        int max_attempts) {
  if (proc.attempt >= max_attempts) return std::nullopt;
  if (proc.accumulated_sinr.empty()) {
    proc.accumulated_sinr.assign(new_per_prb_sinr.begin(), new_per_prb_sinr.end());
  } else {
    if (proc.accumulated_sinr.size() != new_per_prb_sinr.size())
      throw InvariantViolation("harq_combine: PRB count changed between attempts");
    for (std::size_t i = 0; i < new_per_prb_sinr.size(); ++i)
      proc.accumulated_sinr[i] += new_per_prb_sinr[i];
  }
  ++proc.attempt;
  return proc;
}

DecodeResult decode_attempt(RngStream& rng, double bler_prob) {
  return rng.uniform() < bler_prob ? DecodeResult::Nack : DecodeResult::Ack;
}

}  // namespace v2x
