#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles/jacobi.hpp"
#include "v2xslice/slicing.hpp"

using namespace v2x;

namespace {

Scenario line_of(std::vector<double> xs, double length = 2000.0) {
  Scenario s;
  s.highway_length = length;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.position = {xs[i], 0.0};
    v.wants_video = true;
    s.vehicles.push_back(v);
  }
  return s;
}

std::vector<Position> positions(const Scenario& s) {
  std::vector<Position> p;
  for (const auto& v : s.vehicles) p.push_back(v.position);
  return p;
}

oracle::Dense to_dense(const Eigen::MatrixXd& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

}  // namespace

TEST_CASE("similarity values") {
  const double sigma = 5.0;
  std::vector<Position> p{{0, 0}, {0, 0}, {sigma * std::sqrt(2.0 * std::log(2.0)), 0}};
  const auto c = similarity(p, sigma, 2000.0);
  CHECK(c.c(0, 1) == doctest::Approx(1.0));
  CHECK(c.c(0, 2) == doctest::Approx(0.5));
  CHECK(c.c(2, 2) == 1.0);
  CHECK_THROWS_AS(similarity(p, 0.0, 2000.0), std::invalid_argument);
  CHECK_THROWS_AS(similarity(std::vector<Position>{{0, 0}}, 5.0, 2000.0), std::invalid_argument);
}

TEST_CASE("similarity is symmetric with entries in (0, 1]") {
  RngStream rng(1, "sim");
  for (int t = 0; t < 50; ++t) {
    std::vector<Position> p;
    for (int i = 0; i < 20; ++i) p.push_back({rng.uniform(0, 2000), rng.uniform(0, 20)});
    const auto c = similarity(p, rng.uniform(5, 50), 2000.0);
    CHECK(c.c.isApprox(c.c.transpose(), 0.0));
    CHECK(c.c.maxCoeff() <= 1.0);
    CHECK(c.c.minCoeff() >= 0.0);
  }
}

TEST_CASE("two-node Laplacian") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  const auto spec = laplacian({m, 1.0});
  CHECK(spec.eigenvalues[0] == doctest::Approx(0.0));
  CHECK(spec.eigenvalues[1] == doctest::Approx(1.0));
}

TEST_CASE("Laplacian: rows sum to zero, spectrum non-negative, constant null vector") {
  RngStream rng(2, "lap");
  for (int t = 0; t < 30; ++t) {
    std::vector<Position> p;
    const int n = 3 + t % 10;
    for (int i = 0; i < n; ++i) p.push_back({rng.uniform(0, 300), 0});
    const auto c = similarity(p, 30.0, 2000.0);
    const auto L = laplacian_matrix(c);
    for (Eigen::Index i = 0; i < L.rows(); ++i) CHECK(std::abs(L.row(i).sum()) < 1e-9);
    const auto spec = laplacian(c, true);
    CHECK(spec.eigenvalues.minCoeff() > -1e-8);
    CHECK(std::abs(spec.eigenvalues[0]) < 1e-8);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    CHECK((L * ones).norm() < 1e-9);
    // Eigen agrees with the Jacobi reference
    const auto ref = oracle::jacobi_eigenvalues(to_dense(L));
    for (int i = 0; i < n; ++i) CHECK(spec.eigenvalues[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("block-diagonal similarity: zero eigenvalues count the blocks") {
  RngStream rng(3, "blocks");
  for (int t = 0; t < 20; ++t) {
    const int blocks = 1 + t % 5;
    std::vector<int> sizes;
    int n = 0;
    for (int b = 0; b < blocks; ++b) {
      sizes.push_back(1 + static_cast<int>(rng.uniform_int(0, 4)));
      n += sizes.back();
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    int off = 0;
    for (int s : sizes) {
      for (int i = 0; i < s; ++i)
        for (int j = i; j < s; ++j) m(off + i, off + j) = m(off + j, off + i) = i == j ? 1.0 : rng.uniform(0.1, 1.0);
      off += s;
    }
    const auto spec = laplacian({m, 1.0});
    CHECK((spec.eigenvalues.array() < 1e-8).count() == blocks);
  }
}

TEST_CASE("eigengap examples") {
  const std::vector<double> z{0, 0.001, 0.002, 5.0, 5.1};
  CHECK(eigengap_count(z, 4) == 3);
  const std::vector<double> lin{0, 1, 2, 3, 4, 5};
  CHECK(eigengap_count(lin, 5) == 1);
  CHECK_THROWS_AS(eigengap_count(z, 0), std::invalid_argument);
  CHECK_THROWS_AS(eigengap_count(z, 5), std::invalid_argument);

  // two clusters far apart relative to sigma
  const auto s = line_of({0, 2, 4, 6, 700, 702, 704});
  const auto c = similarity(positions(s), 5.0, 2000.0);
  const auto spec = laplacian(c);
  CHECK(eigengap_count(spec, 6) == 2);
  const auto ref = oracle::jacobi_eigenvalues(oracle::laplacian_of(to_dense(c.c)));
  CHECK(oracle::brute_force_eigengap(ref, 6) == 2);
}

TEST_CASE("eigengap agrees with the brute-force scan on random sets") {
  RngStream rng(4, "gap");
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 10));
    std::vector<Position> p;
    for (int i = 0; i < n; ++i) p.push_back({rng.uniform(0, 400), rng.uniform(0, 20)});
    const auto c = similarity(p, rng.uniform(2, 60), 2000.0);
    const auto ref = oracle::jacobi_eigenvalues(oracle::laplacian_of(to_dense(c.c)));
    const int e_max = n - 1;
    CHECK(eigengap_count(laplacian(c), e_max) == oracle::brute_force_eigengap(ref, e_max));
  }
}

TEST_CASE("eligible access points") {
  auto s = line_of({0, 10, 20, 30, 40});
  s.vehicles[2].wants_video = false;
  const std::vector<double> high{9, 9, 9, 9, 9};
  CHECK(eligible_aps(s, high, 3.0) == std::vector<int>{0, 1, 3, 4});
  CHECK(eligible_aps(s, high, INFINITY).empty());
  const std::vector<double> mixed{2.9, 3.0, 10, 3.1, -4};
  CHECK(eligible_aps(s, mixed, 3.0) == std::vector<int>{1, 3});
  CHECK_THROWS(eligible_aps(s, std::vector<double>{1, 2}, 3.0));
}

TEST_CASE("k-means separates obvious groups") {
  Eigen::MatrixXd pts(6, 1);
  pts << 0.0, 0.1, 0.2, 10.0, 10.1, 10.2;
  RngStream rng(5, "km");
  const auto r = kmeans(pts, 2, 5, rng);
  CHECK(r.labels[0] == r.labels[1]);
  CHECK(r.labels[1] == r.labels[2]);
  CHECK(r.labels[3] == r.labels[4]);
  CHECK(r.labels[0] != r.labels[3]);
  CHECK(r.inertia == doctest::Approx(0.04));
  CHECK_THROWS_AS(kmeans(pts, 7, 1, rng), std::invalid_argument);

  // every cluster non-empty even with duplicate rows
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(5, 2);
  const auto d = kmeans(same, 3, 2, rng);
  std::set<int> used(d.labels.begin(), d.labels.end());
  CHECK(used.size() == 3);
}

TEST_CASE("plan: a single eligible vehicle serves everyone") {
  const auto s = line_of({0, 10, 20, 30});
  RngStream rng(6, "plan");
  const std::vector<int> eligible{2};
  const auto plan = build_plan(s, eligible, {}, 300, rng);
  CHECK(plan.access_points == std::vector<int>{2});
  CHECK(plan.assignment.size() == 3);
  for (const auto& [v, ap] : plan.assignment) CHECK(ap == 2);
  CHECK(plan.valid_until_ms == 400);
  CHECK(plan.is_access_point(2));
  CHECK_FALSE(plan.is_access_point(0));
  CHECK_THROWS_AS(build_plan(s, std::vector<int>{}, {}, 0, rng), std::invalid_argument);
}

TEST_CASE("plan: two clusters each get their own AP") {
  const auto s = line_of({0, 3, 6, 9, 800, 803, 806, 809});
  RngStream rng(7, "plan");
  const std::vector<int> eligible{1, 6};
  const auto plan = build_plan(s, eligible, {}, 0, rng);
  CHECK(plan.f == 2);
  CHECK(plan.access_points == std::vector<int>{1, 6});
  // nearest-similarity oracle
  for (const auto& [v, ap] : plan.assignment) {
    const double dx = s.vehicles[static_cast<std::size_t>(v)].position.x;
    CHECK(ap == (dx < 400 ? 1 : 6));
  }
}

TEST_CASE("plan invariants on random drops") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    HighwayLayout l;
    l.band = {1.0, 100.0};
    RngStream drop(seed, "drop");
    const auto s = generate_drop(l, drop);
    std::vector<double> sinr(s.vehicles.size());
    RngStream r(seed, "sinr");
    for (auto& x : sinr) x = r.uniform(0, 20);
    const auto eligible = eligible_aps(s, sinr, 8.0);
    REQUIRE_FALSE(eligible.empty());
    RngStream rng(seed, "plan");
    const auto plan = build_plan(s, eligible, {}, 0, rng);
    for (int ap : plan.access_points) CHECK(std::binary_search(eligible.begin(), eligible.end(), ap));
    CHECK(std::is_sorted(plan.access_points.begin(), plan.access_points.end()));
    const auto expect = std::min<std::size_t>(static_cast<std::size_t>(plan.f), eligible.size());
    CHECK(plan.access_points.size() <= expect);
    CHECK(plan.assignment.size() + plan.access_points.size() == s.vehicles.size());
    for (const auto& [v, ap] : plan.assignment) {
      CHECK_FALSE(plan.is_access_point(v));
      CHECK(plan.is_access_point(ap));
      // the assigned AP is a nearest one
      const auto& pv = s.vehicles[static_cast<std::size_t>(v)].position;
      const double d = distance(pv, s.vehicles[static_cast<std::size_t>(ap)].position, s.highway_length);
      for (int other : plan.access_points)
        CHECK(d <= distance(pv, s.vehicles[static_cast<std::size_t>(other)].position, s.highway_length) + 1e-9);
    }
  }
}

TEST_CASE("plan: small sigma gives many more access points than large sigma") {
  HighwayLayout l;
  l.band = {1.0, 100.0};
  RngStream drop(1, "drop");
  const auto s = generate_drop(l, drop);
  std::vector<int> all;
  for (const auto& v : s.vehicles)
    if (v.wants_video) all.push_back(v.id);
  SlicingParams narrow, wide;
  narrow.sigma = 5.0;
  wide.sigma = 50.0;
  RngStream a(1, "plan"), b(1, "plan");
  const auto p5 = build_plan(s, all, narrow, 0, a);
  const auto p50 = build_plan(s, all, wide, 0, b);
  MESSAGE("APs at sigma 5: " << p5.access_points.size() << ", at sigma 50: " << p50.access_points.size());
  CHECK(p5.access_points.size() >= 3 * p50.access_points.size());
}

TEST_CASE("plan is deterministic for a fixed stream") {
  const auto s = line_of({0, 4, 9, 200, 205, 420, 421, 600});
  const std::vector<int> eligible{0, 3, 5, 7};
  RngStream a(8, "plan"), b(8, "plan");
  const auto pa = build_plan(s, eligible, {}, 0, a);
  const auto pb = build_plan(s, eligible, {}, 0, b);
  CHECK(pa.access_points == pb.access_points);
  CHECK(pa.assignment == pb.assignment);
}
