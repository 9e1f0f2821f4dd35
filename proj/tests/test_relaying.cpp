#include <cmath>
#include <set>

#include "doctest.h"
#include "v2xslice/relaying.hpp"

using namespace v2x;

namespace {

Scenario video_line(std::vector<double> xs) {
  Scenario s;
  s.highway_length = 2000.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.position = {xs[i], 0.0};
    v.wants_video = true;
    s.vehicles.push_back(v);
  }
  return s;
}

}  // namespace

TEST_CASE("low-SINR filter") {
  const std::vector<int> video{0, 2, 3};
  const std::vector<double> sinr{-3.0, 9.0, 0.5, -0.1};
  CHECK(identify_low_sinr(video, std::vector<double>{5, 5, 5, 5}, 0.0).empty());
  CHECK(identify_low_sinr(video, sinr, INFINITY) == video);
  CHECK(identify_low_sinr(video, sinr, 0.0) == std::vector<int>{0, 3});
}

TEST_CASE("relay selection examples") {
  RelayParams p;
  const Position low{100.0, 0.0};
  std::vector<RelayCandidate> one{{7, 10.0, {150.0, 0.0}, 0}};
  CHECK(select_relay(low, one, p, 2000.0) == 7);

  std::vector<RelayCandidate> far{{7, 10.0, {400.0, 0.0}, 0}};
  CHECK_FALSE(select_relay(low, far, p, 2000.0).has_value());

  // equal SINR, 20 m and 120 m away: proximity term decides
  std::vector<RelayCandidate> two{{4, 12.0, {220.0, 0.0}, 0}, {5, 12.0, {120.0, 0.0}, 0}};
  CHECK(select_relay(low, two, p, 2000.0) == 5);

  // a full relay is skipped
  two[1].clients = p.max_clients;
  CHECK(select_relay(low, two, p, 2000.0) == 4);
}

TEST_CASE("relay score is the min of the SINR margin and the proximity term") {
  RelayParams p;
  p.low_sinr_threshold_db = 5.0;
  const Position low{0.0, 0.0};
  // A: margin 1 dB, very close. B: margin 20 dB, 100 m away -> 0.1 * 50 = 5
  std::vector<RelayCandidate> c{{1, 6.0, {1.0, 0.0}, 0}, {2, 25.0, {100.0, 0.0}, 0}};
  CHECK(select_relay(low, c, p, 2000.0) == 2);
  // wrap-around distance counts
  std::vector<RelayCandidate> w{{3, 25.0, {1990.0, 0.0}, 0}};
  CHECK(select_relay(low, w, p, 2000.0) == 3);
}

TEST_CASE("relay plan: disjoint from APs, client limit respected") {
  RngStream rng(1, "relay");
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(rng.uniform(0, 2000));
    auto s = video_line(xs);
    for (auto& v : s.vehicles) v.wants_video = rng.bernoulli(0.7);
    std::vector<double> sinr(xs.size());
    for (auto& x : sinr) x = rng.uniform(3, 20);
    std::vector<int> aps;
    for (int i = 0; i < 40; i += 5) aps.push_back(i);
    RelayParams p;
    p.low_sinr_threshold_db = 6.0;
    p.max_clients = 2;
    const auto plan = build_relay_plan(s, sinr, aps, p);
    const std::set<int> ap_set(aps.begin(), aps.end());
    for (const auto& [client, relay] : plan.relay_of) {
      CHECK(client != relay);
      CHECK_FALSE(ap_set.count(relay));
      CHECK_FALSE(ap_set.count(client));
      CHECK(s.vehicles[static_cast<std::size_t>(client)].wants_video);
      CHECK(s.vehicles[static_cast<std::size_t>(relay)].wants_video);
      CHECK(sinr[static_cast<std::size_t>(client)] < 6.0);
      CHECK(sinr[static_cast<std::size_t>(relay)] >= 6.0);
      CHECK(distance(s.vehicles[static_cast<std::size_t>(client)].position,
                     s.vehicles[static_cast<std::size_t>(relay)].position, 2000.0) <= p.max_range_m);
    }
    for (int r : plan.relays()) CHECK(plan.clients_of(r) <= 2);
  }
}

TEST_CASE("relay plan: nobody below a 0 dB cutoff means no relays") {
  const auto s = video_line({0, 50, 100});
  const std::vector<double> sinr{3.1, 10, 20};
  CHECK(build_relay_plan(s, sinr, std::vector<int>{}, RelayParams{}).relay_of.empty());
  CHECK_THROWS(build_relay_plan(s, std::vector<double>{1.0}, std::vector<int>{}, RelayParams{}));
}

TEST_CASE("two-hop delivery") {
  const auto ok = relay_delivery(1000, {true, 2}, HopResult{true, 3});
  CHECK(ok.delivered);
  CHECK(ok.bits == 1000);
  CHECK(ok.latency_ttis == 2 + 1 + 3);

  const auto lost2 = relay_delivery(1000, {true, 1}, HopResult{false, 4});
  CHECK_FALSE(lost2.delivered);
  CHECK(lost2.bits == 0);
  const auto lost_both = relay_delivery(1000, {false, 4}, HopResult{false, 4});
  CHECK_FALSE(lost_both.delivered);
  const auto no_hop2 = relay_delivery(1000, {false, 4}, std::nullopt);
  CHECK_FALSE(no_hop2.delivered);
  CHECK(no_hop2.latency_ttis == 4);
}

TEST_CASE("two-hop delivery probability is the product of hop successes") {
  RngStream rng(2, "hops");
  const int n = 100000;
  int delivered = 0;
  for (int i = 0; i < n; ++i) {
    const HopResult h1{!rng.bernoulli(0.1), 1};
    std::optional<HopResult> h2;
    if (h1.ack) h2 = HopResult{!rng.bernoulli(0.1), 1};
    delivered += relay_delivery(1000, h1, h2).delivered;
  }
  CHECK(std::abs(static_cast<double>(delivered) / n - 0.81) <= 0.01);
}
