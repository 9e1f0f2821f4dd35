#include "v2xslice/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace v2x {

SimilarityMatrix similarity(std::span<const Position> positions, double sigma,
                            double highway_length) {
  if (!(sigma > 0.0)) throw std::invalid_argument("similarity: sigma must be positive");
  if (positions.size() < 2) throw std::invalid_argument("similarity: need at least two positions");
  const auto n = static_cast<Eigen::Index>(positions.size());
  SimilarityMatrix s;
  s.sigma = sigma;
  s.c.resize(n, n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.c(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = distance(positions[i], positions[j], highway_length);
      const double v = std::exp(-d * d * inv);
      s.c(i, j) = v;
      s.c(j, i) = v;
    }
  }
  return s;
}

Eigen::MatrixXd laplacian_matrix(const SimilarityMatrix& c) {
  const Eigen::VectorXd deg = c.c.rowwise().sum();
  Eigen::MatrixXd l = -c.c;
  l.diagonal() += deg;
  return l;
}

SpectralDecomposition laplacian(const SimilarityMatrix& c, bool with_vectors) {
  SpectralDecomposition out;
  out.degrees = c.c.rowwise().sum();
  const Eigen::MatrixXd l = laplacian_matrix(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      l, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("laplacian: eigensolver failed");
  out.eigenvalues = solver.eigenvalues();
  if (with_vectors) out.eigenvectors = solver.eigenvectors();
  return out;
}

int eigengap_count(std::span<const double> z, int e_max) {
  const int n = static_cast<int>(z.size());
  if (n < 2) throw std::invalid_argument("eigengap_count: need at least two eigenvalues");
  if (e_max < 1 || e_max > n - 1) throw std::invalid_argument("eigengap_count: e_max out of range");
  // Gaps that agree to rounding count as ties.
  const double tol = 1e-9 * std::max(1.0, std::abs(z[static_cast<std::size_t>(e_max)]));
  int best = 1;
  double best_gap = z[1] - z[0];
  for (int e = 2; e <= e_max; ++e) {
    const double gap = z[static_cast<std::size_t>(e)] - z[static_cast<std::size_t>(e - 1)];
    if (gap > best_gap + tol) {
      best_gap = gap;
      best = e;
    }
  }
  return best;
}

int eigengap_count(const SpectralDecomposition& spec, int e_max) {
  return eigengap_count(std::span<const double>(spec.eigenvalues.data(),
                                                static_cast<std::size_t>(spec.eigenvalues.size())),
                        e_max);
}

std::vector<int> eligible_aps(const Scenario& scenario, std::span<const double> sinr_v2i_db,
                              double threshold_db) {
  if (sinr_v2i_db.size() != scenario.vehicles.size())
    throw std::invalid_argument("eligible_aps: one SINR per vehicle expected");
  std::vector<int> out;
  for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) {
    const auto& v = scenario.vehicles[i];
    if (v.wants_video && sinr_v2i_db[i] >= threshold_db) out.push_back(v.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ------------------------------------------------------------------ k-means

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::VectorXd& x_norm,
                                  const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd d = -2.0 * x * centers.transpose();
  d.colwise() += x_norm;
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& x, int k, RngStream& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(rng.uniform_int(0, n - 1));
  Eigen::VectorXd best = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= best[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = rng.uniform_int(0, n - 1);
    }
    centers.row(c) = x.row(pick);
    best = best.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, int restarts, RngStream& rng,
                    int max_iterations) {
  const Eigen::Index n = x.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= rows");
  const Eigen::VectorXd x_norm = x.rowwise().squaredNorm();

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
    Eigen::MatrixXd centers = seed_plus_plus(x, k, rng);
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd point_cost(n);
    for (int it = 0; it < max_iterations; ++it) {
      const Eigen::MatrixXd d = squared_distances(x, x_norm, centers);
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index j;
        point_cost[i] = d.row(i).minCoeff(&j);
        if (labels[i] != j) {
          labels[i] = static_cast<int>(j);
          changed = true;
        }
      }
      // Refill empty clusters with the worst-served points.
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int l : labels) ++counts[l];
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        Eigen::Index worst = 0;
        double worst_cost = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (counts[labels[i]] > 1 && point_cost[i] > worst_cost) {
            worst_cost = point_cost[i];
            worst = i;
          }
        }
        --counts[labels[worst]];
        labels[worst] = c;
        counts[c] = 1;
        point_cost[worst] = 0.0;
        changed = true;
      }
      if (!changed && it > 0) break;
      centers.setZero();
      for (Eigen::Index i = 0; i < n; ++i) centers.row(labels[i]) += x.row(i);
      for (int c = 0; c < k; ++c) centers.row(c) /= counts[c];
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) inertia += (x.row(i) - centers.row(labels[i])).squaredNorm();
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
    }
  }
  return best;
}

// --------------------------------------------------------------------- plan

bool AccessPointPlan::is_access_point(int vehicle_id) const {
  return std::binary_search(access_points.begin(), access_points.end(), vehicle_id);
}

std::map<int, int> assign_to_access_points(const Scenario& scenario,
                                           std::span<const int> access_points) {
  std::unordered_map<int, const Vehicle*> by_id;
  for (const auto& v : scenario.vehicles) by_id[v.id] = &v;
  std::vector<int> aps(access_points.begin(), access_points.end());
  std::sort(aps.begin(), aps.end());

  std::map<int, int> out;
  for (const auto& v : scenario.vehicles) {
    if (std::binary_search(aps.begin(), aps.end(), v.id)) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ap : aps) {
      const double d = distance(v.position, by_id.at(ap)->position, scenario.highway_length);
      if (d < best_d) {  // ascending ids, so ties keep the lowest
        best_d = d;
        best = ap;
      }
    }
    if (best >= 0) out[v.id] = best;
  }
  return out;
}

AccessPointPlan build_plan(const Scenario& scenario, std::span<const int> eligible,
                           const SlicingParams& params, std::int64_t now_ms, RngStream& rng) {
  if (eligible.empty()) throw std::invalid_argument("build_plan: no eligible access points");
  AccessPointPlan plan;
  plan.valid_until_ms = now_ms + params.reslice_period_ms;

  const auto& vehicles = scenario.vehicles;
  const int n = static_cast<int>(vehicles.size());
  std::vector<int> ap_ids;

  if (n < 2) {
    plan.f = 1;
    ap_ids.push_back(eligible.front());
  } else {
    std::vector<Position> pos;
    pos.reserve(vehicles.size());
    for (const auto& v : vehicles) pos.push_back(v.position);
    const auto sim = similarity(pos, params.sigma, scenario.highway_length);
    const auto spec = laplacian(sim, /*with_vectors=*/true);
    const int e_max = std::max(1, std::min(n - 1, params.e_max_cap));
    plan.f = eigengap_count(spec, e_max);
    plan.eigenvalues.assign(spec.eigenvalues.data(), spec.eigenvalues.data() + e_max + 1);

    if (plan.f >= static_cast<int>(eligible.size())) {
      ap_ids.assign(eligible.begin(), eligible.end());
    } else {
      const Eigen::MatrixXd features = spec.eigenvectors.leftCols(plan.f);
      const auto km = kmeans(features, plan.f, params.kmeans_restarts, rng);

      struct Cluster {
        int size = 0;
        double cx = 0.0, sx = 0.0, y = 0.0;
        Position centroid;
      };
      std::vector<Cluster> clusters(static_cast<std::size_t>(plan.f));
      const double L = scenario.highway_length;
      for (int i = 0; i < n; ++i) {
        auto& c = clusters[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])];
        const double th = 2.0 * std::numbers::pi * vehicles[i].position.x / L;
        c.cx += std::cos(th);
        c.sx += std::sin(th);
        c.y += vehicles[i].position.y;
        ++c.size;
      }
      for (auto& c : clusters) {
        if (c.size == 0) continue;
        double th = std::atan2(c.sx, c.cx);
        if (th < 0) th += 2.0 * std::numbers::pi;
        c.centroid = {std::fmod(th / (2.0 * std::numbers::pi) * L, L), c.y / c.size};
      }
      std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
        if (a.size != b.size) return a.size > b.size;
        return a.centroid.x < b.centroid.x;
      });

      std::unordered_map<int, const Vehicle*> by_id;
      for (const auto& v : vehicles) by_id[v.id] = &v;
      std::vector<int> pool(eligible.begin(), eligible.end());
      std::sort(pool.begin(), pool.end());
      std::vector<bool> used(pool.size(), false);
      for (const auto& c : clusters) {
        if (c.size == 0) continue;
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < pool.size(); ++k) {
          if (used[k]) continue;
          const double d = distance(c.centroid, by_id.at(pool[k])->position, L);
          if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
          }
        }
        if (best < 0) break;
        used[static_cast<std::size_t>(best)] = true;
        ap_ids.push_back(pool[static_cast<std::size_t>(best)]);
      }
    }
  }

  std::sort(ap_ids.begin(), ap_ids.end());
  plan.access_points = ap_ids;
  plan.assignment = assign_to_access_points(scenario, plan.access_points);
  return plan;
}

}  // namespace v2x
