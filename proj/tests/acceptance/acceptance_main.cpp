// Acceptance gate. Runs the desk-scale matrix (2 km, 10 s, 5 seeds) once and
// checks each criterion against it, plus the spectral and link-abstraction
// property suites. One PASS/FAIL line per criterion; exit code 1 if any fail.
//
//   acceptance [--out DIR]   DIR receives the matrix CSVs (default: acceptance_out)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/jacobi.hpp"
#include "v2xslice/link_abstraction.hpp"
#include "v2xslice/runner.hpp"
#include "v2xslice/slicing.hpp"

using namespace v2x;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 5;
constexpr double kCellBudgetS = 300.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

class Matrix {
 public:
  Matrix(const SimConfig& base, const LinkModel& model) : base_(base), model_(model) {}

  const CellResult& get(const std::string& scen, Technology tech, double sigma = 5.0) {
    if (!uses_slicing(tech)) sigma = base_.slicing.sigma;
    const auto key = scen + "/" + technology_name(tech) + "/" + fmt("%g", sigma);
    auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < kSeeds; ++i) seeds.push_back(base_.seed + static_cast<std::uint64_t>(i));
    std::cerr << "  running " << key << " ..." << std::flush;
    auto res = run_cell(base_, {scen, tech, sigma}, seeds, model_);
    std::cerr << " prr " << format_g6(res.prr()) << " (" << format_g6(res.wall_s) << " s)\n";
    order_.push_back(key);
    return cells_.emplace(key, std::move(res)).first->second;
  }

  double prr(const std::string& scen, Technology tech, double sigma = 5.0) { return get(scen, tech, sigma).prr(); }

  std::vector<CellResult> all() const {
    std::vector<CellResult> out;
    for (const auto& k : order_) out.push_back(cells_.at(k));
    return out;
  }

 private:
  SimConfig base_;
  const LinkModel& model_;
  std::map<std::string, CellResult> cells_;
  std::vector<std::string> order_;
};

const std::vector<std::string> kBands{"s1", "s2", "s3"};

// ------------------------------------------------------------------ 1 .. 7

Verdict slicing_gain(Matrix& m) {
  const double ns = m.prr("s1", Technology::Ns, 5.0);
  const double rsu = m.prr("s1", Technology::Rsu);
  const double wall = m.get("s1", Technology::Ns, 5.0).wall_s;
  const double slowest = std::max(wall, m.get("s1", Technology::Rsu).wall_s);
  Verdict v;
  v.pass = ns >= 0.95 && ns - rsu >= 0.30 && slowest <= kCellBudgetS;
  v.detail = "PRR ns(5)=" + format_g6(ns) + " rsu=" + format_g6(rsu) + " gain=" + format_g6(ns - rsu) +
             " (need >=0.95, >=0.30); slowest cell " + format_g6(slowest) + " s (<=300)";
  return v;
}

Verdict sigma_ordering(Matrix& m) {
  Verdict v{true, ""};
  for (const auto& b : kBands) {
    const double p5 = m.prr(b, Technology::Ns, 5.0), p50 = m.prr(b, Technology::Ns, 50.0);
    v.pass = v.pass && p5 >= p50;
    v.detail += b + ": " + format_g6(p5) + " vs " + format_g6(p50) + "; ";
  }
  return v;
}

Verdict density_ordering(Matrix& m) {
  const double a = m.prr("s1", Technology::Rsu), b = m.prr("s2", Technology::Rsu), c = m.prr("s3", Technology::Rsu);
  return {a <= b && b <= c, "PRR rsu " + format_g6(a) + " <= " + format_g6(b) + " <= " + format_g6(c)};
}

Verdict relay_penalty(Matrix& m) {
  Verdict v{true, ""};
  for (const auto& b : kBands) {
    for (double s : {5.0, 50.0}) {
      const double ns = m.prr(b, Technology::Ns, s), nr = m.prr(b, Technology::NsRelay, s);
      const bool strict = b == "s1" && s == 50.0;
      v.pass = v.pass && (strict ? nr < ns : nr <= ns);
      v.detail += b + "/" + fmt("%g", s) + ": " + format_g6(nr) + (strict ? " < " : " <= ") + format_g6(ns) + "; ";
    }
  }
  return v;
}

Verdict relay_video_gain(Matrix& m) {
  const double ns = m.get("s3", Technology::Ns, 5.0).metrics.target_probability(Slice::Video, 1000.0);
  const double nr = m.get("s3", Technology::NsRelay, 5.0).metrics.target_probability(Slice::Video, 1000.0);
  return {nr - ns >= 0.05, "P(video >= 1000 kbps) ns_relay=" + format_g6(nr) + " ns=" + format_g6(ns) +
                               " diff=" + format_g6(nr - ns) + " (need >= 0.05)"};
}

Verdict safety_target(Matrix& m) {
  const double ns = m.get("s3", Technology::Ns, 5.0).metrics.target_probability(Slice::Safety, 128.0);
  const double nr = m.get("s3", Technology::NsRelay, 5.0).metrics.target_probability(Slice::Safety, 128.0);
  return {ns > nr, "P(safety >= 128 kbps) ns=" + format_g6(ns) + " ns_relay=" + format_g6(nr)};
}

Verdict ap_count(Matrix& m) {
  const auto& a = m.get("s1", Technology::Ns, 5.0);
  const auto& b = m.get("s1", Technology::Ns, 50.0);
  std::size_t reslices = 0;
  for (const auto& r : b.runs) reslices += r.ap_counts.size();
  const double m5 = a.median_ap_count(), m50 = b.median_ap_count();
  return {reslices >= 20 && m5 >= 3.0 * m50,
          "median |S| sigma5=" + format_g6(m5) + " sigma50=" + format_g6(m50) + " over " +
              std::to_string(reslices) + " re-slices (need ratio >= 3)"};
}

// ---------------------------------------------------------------------- 8

oracle::Dense dense(const Eigen::MatrixXd& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

Verdict spectral_suite() {
  RngStream rng(20240601, "acceptance-spectral");
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 10));
    std::vector<Position> p;
    for (int i = 0; i < n; ++i) p.push_back({rng.uniform(0, 500), rng.uniform(0, 20)});
    const auto c = similarity(p, rng.uniform(2, 80), 2000.0);
    const auto ref = oracle::jacobi_eigenvalues(oracle::laplacian_of(dense(c.c)));
    const int e_max = n - 1;
    if (eigengap_count(laplacian(c), e_max) != oracle::brute_force_eigengap(ref, e_max)) ++mismatches;
  }
  int wrong_blocks = 0;
  for (int t = 0; t < 100; ++t) {
    const int blocks = 1 + static_cast<int>(rng.uniform_int(0, 5));
    std::vector<int> sizes;
    int n = 0;
    for (int b = 0; b < blocks; ++b) {
      sizes.push_back(1 + static_cast<int>(rng.uniform_int(0, 5)));
      n += sizes.back();
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    int off = 0;
    for (int s : sizes) {
      for (int i = 0; i < s; ++i)
        for (int j = i; j < s; ++j) m(off + i, off + j) = m(off + j, off + i) = i == j ? 1.0 : rng.uniform(0.05, 1.0);
      off += s;
    }
    // shuffle node order so blocks are not contiguous
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) shuffled(i, j) = m(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    const auto spec = laplacian({shuffled, 1.0});
    if ((spec.eigenvalues.array() < 1e-8).count() != blocks) ++wrong_blocks;
  }
  return {mismatches == 0 && wrong_blocks == 0,
          "eigengap mismatches " + std::to_string(mismatches) + "/1000, zero-eigenvalue count errors " +
              std::to_string(wrong_blocks) + "/100"};
}

// ---------------------------------------------------------------------- 9

Verdict link_suite(const LinkModel& model) {
  RngStream rng(20240602, "acceptance-link");
  const auto& mi = model.mi;
  int bad_fixed = 0, bad_bounds = 0, bad_perm = 0, bad_harq = 0, bad_mcs = 0;
  for (int t = 0; t < 2000; ++t) {
    const int m = 2 * static_cast<int>(rng.uniform_int(1, 3));
    const double g = db_to_linear(rng.uniform(-15, 35));
    const std::vector<double> flat(1 + static_cast<std::size_t>(rng.uniform_int(0, 49)), g);
    if (std::abs(miesm_effective_sinr(flat, m, mi) - g) > 1e-9 * g) ++bad_fixed;

    std::vector<double> s(1 + static_cast<std::size_t>(rng.uniform_int(0, 49)));
    for (auto& x : s) x = db_to_linear(rng.uniform(-15, 35));
    const double eff = miesm_effective_sinr(s, m, mi);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (eff < *lo * (1 - 1e-12) || eff > *hi * (1 + 1e-12)) ++bad_bounds;
    auto perm = s;
    std::shuffle(perm.begin(), perm.end(), rng);
    if (std::abs(miesm_effective_sinr(perm, m, mi) - eff) > 1e-9 * eff) ++bad_perm;

    // HARQ: combined energy and BLER never get worse
    const auto& mcs = model.mcs.at(static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(model.mcs.size()) - 1)));
    HarqProcess h;
    double prev = 1.0;
    for (int k = 0; k < kMaxHarqAttempts; ++k) {
      std::vector<double> fresh(s.size());
      for (auto& x : fresh) x = db_to_linear(rng.uniform(-15, 25));
      h = *harq_combine(h, fresh);
      const double b = bler(linear_to_db(miesm_effective_sinr(h.accumulated_sinr, mcs.modulation_order, mi)), mcs, model.bler);
      if (b > prev + 1e-12) ++bad_harq;
      prev = b;
    }
    if (harq_combine(h, s).has_value()) ++bad_harq;
  }
  int prev_idx = 0;
  for (double g = -30; g <= 45; g += 0.01) {
    const int idx = select_mcs(g, model.mcs).index;
    if (idx < prev_idx) ++bad_mcs;
    prev_idx = idx;
  }
  double worst = 0.0;
  for (double p : {0.01, 0.1, 0.3, 0.5, 0.9}) {
    int nack = 0;
    for (int i = 0; i < 100000; ++i) nack += decode_attempt(rng, p) == DecodeResult::Nack;
    worst = std::max(worst, std::abs(nack / 1e5 - p));
  }
  const bool ok = bad_fixed + bad_bounds + bad_perm + bad_harq + bad_mcs == 0 && worst <= 0.01;
  return {ok, "MIESM fixed-point/bounds/permutation failures " + std::to_string(bad_fixed) + "/" +
                  std::to_string(bad_bounds) + "/" + std::to_string(bad_perm) + ", HARQ " +
                  std::to_string(bad_harq) + ", select_mcs " + std::to_string(bad_mcs) +
                  ", worst decode frequency error " + format_g6(worst) + " (<= 0.01)"};
}

// --------------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict conservation_determinism(const SimConfig& base, std::size_t runs_done, const fs::path& out) {
  // every matrix run already passed the per-flow ledger check (simulate throws
  // otherwise); here the same run is repeated through the CLI path
  SimConfig cfg = base;
  apply_config_key(cfg, "scenario", "s2");
  cfg.technology = Technology::NsRelay;
  std::ostringstream log;
  const int a = run_command(cfg, out / "determinism_a", true, log);
  const int b = run_command(cfg, out / "determinism_b", true, log);
  int differing = 0, compared = 0;
  if (a == 0 && b == 0) {
    for (const auto& e : fs::directory_iterator(out / "determinism_a")) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(out / "determinism_b" / e.path().filename())) ++differing;
    }
  }
  return {a == 0 && b == 0 && compared >= 5 && differing == 0,
          std::to_string(runs_done) + " runs with balanced ledgers; " + std::to_string(compared) +
              " CSVs compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--out DIR]\n";
      return 2;
    }
  }
  fs::create_directories(out);

  SimConfig base;  // desk scale: 2 km, 10 s
  base.seed = 1;
  base.validate();
  const LinkModel model = load_link_model(base);
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
  Matrix m(base, model);
  // the suites run first; they are quick
  criteria.emplace_back("8 spectral oracle suite", [] { return spectral_suite(); });
  criteria.emplace_back("9 link-abstraction property suite", [&] { return link_suite(model); });
  criteria.emplace_back("1 slicing gain, dense band", [&] { return slicing_gain(m); });
  criteria.emplace_back("2 sigma ordering", [&] { return sigma_ordering(m); });
  criteria.emplace_back("3 RSU density ordering", [&] { return density_ordering(m); });
  criteria.emplace_back("4 relaying PRR penalty", [&] { return relay_penalty(m); });
  criteria.emplace_back("5 relaying video gain, 200-300 m, sigma 5", [&] { return relay_video_gain(m); });
  criteria.emplace_back("6 safety target, 200-300 m, sigma 5", [&] { return safety_target(m); });
  criteria.emplace_back("7 AP count, dense band", [&] { return ap_count(m); });
  criteria.emplace_back("10 conservation and determinism", [&] {
    std::size_t runs = 0;
    for (const auto& c : m.all()) runs += c.runs.size();
    return conservation_determinism(base, runs, out);
  });

  std::map<int, std::string> lines;
  int failed = 0;
  for (auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    const std::string line = std::string(v.pass ? "PASS" : "FAIL") + "  " + name + "  " + v.detail;
    std::cout << line << std::endl;
    lines[std::stoi(name)] = line;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto cells = m.all();
  write_outputs(out, base, model, cells, wall);
  std::ofstream report(out / "acceptance.txt");
  for (const auto& [k, line] : lines) report << line << '\n';

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << " ("
            << format_g6(wall) << " s)\n";
  return failed == 0 ? 0 : 1;
}
