#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "v2xslice/rng.hpp"
#include "v2xslice/scenario.hpp"

namespace v2x {

struct SimilarityMatrix {
  Eigen::MatrixXd c;  // symmetric, unit diagonal, entries in (0, 1]
  double sigma = 0.0;
};

/// Gaussian similarity exp(-d^2 / (2 sigma^2)) with d the wrap-around
/// distance. Throws std::invalid_argument for sigma <= 0 or fewer than two
/// positions.
SimilarityMatrix similarity(std::span<const Position> positions, double sigma,
                            double highway_length);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues; empty unless requested
  Eigen::VectorXd degrees;       // diagonal of D
};

// Spectrum of the unnormalised Laplacian L = D - C.
SpectralDecomposition laplacian(const SimilarityMatrix& c, bool with_vectors = false);
Eigen::MatrixXd laplacian_matrix(const SimilarityMatrix& c);

/// Cluster count by the largest eigengap:
/// f = argmax_{e = 1..e_max} (z_{e+1} - z_e), 1-based eigenvalues, ties to the
/// smaller e. Requires 1 <= e_max <= n - 1.
int eigengap_count(std::span<const double> eigenvalues, int e_max);
int eigengap_count(const SpectralDecomposition& spec, int e_max);

// Video vehicles whose wideband V2I SINR is >= threshold_db, sorted by id.
// `sinr_v2i_db` is indexed like scenario.vehicles.
std::vector<int> eligible_aps(const Scenario& scenario, std::span<const double> sinr_v2i_db,
                              double threshold_db);

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
};

/// Lloyd's k-means with k-means++ seeding, best of `restarts`. Rows are points.
/// Every cluster ends up non-empty when rows >= k.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, RngStream& rng,
                    int max_iterations = 100);

struct SlicingParams {
  double sigma = 5.0;
  int e_max_cap = 256;
  int kmeans_restarts = 10;
  std::int64_t reslice_period_ms = 100;
};

struct AccessPointPlan {
  std::vector<int> access_points;  // vehicle ids, ascending
  std::map<int, int> assignment;   // non-AP vehicle id -> AP vehicle id
  int f = 0;                       // eigengap cluster count
  std::int64_t valid_until_ms = 0;
  std::vector<double> eigenvalues;  // first e_max + 1 eigenvalues

  [[nodiscard]] bool is_access_point(int vehicle_id) const;
};

/// Builds the autonomous-driving slice plan for one snapshot.
/// Throws std::invalid_argument if `eligible` is empty.
AccessPointPlan build_plan(const Scenario& scenario, std::span<const int> eligible,
                           const SlicingParams& params, std::int64_t now_ms, RngStream& rng);

// Non-AP vehicles to the most similar (nearest) AP, ties to the lowest AP id.
std::map<int, int> assign_to_access_points(const Scenario& scenario,
                                           std::span<const int> access_points);

}  // namespace v2x
