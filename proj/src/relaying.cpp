#include "v2xslice/relaying.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace v2x {

int RelayPlan::clients_of(int relay_id) const {
  int n = 0;
  for (const auto& [client, relay] : relay_of)
    if (relay == relay_id) ++n;
  return n;
}

std::vector<int> RelayPlan::relays() const {
  std::vector<int> out;
  for (const auto& [client, relay] : relay_of) out.push_back(relay);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> identify_low_sinr(std::span<const int> video_ids, std::span<const double> sinr_db,
                                   double threshold_db) {
  std::vector<int> out;
  for (int id : video_ids)
    if (sinr_db[static_cast<std::size_t>(id)] < threshold_db) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<int> select_relay(const Position& low_vehicle,
                                std::span<const RelayCandidate> candidates,
                                const RelayParams& params, double highway_length) {
  std::optional<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.clients >= params.max_clients) continue;
    const double d = distance(low_vehicle, c.position, highway_length);
    if (d > params.max_range_m) continue;
    const double score = std::min(c.sinr_v2i_db - params.low_sinr_threshold_db,
                                  params.kappa_db_per_m * (params.max_range_m - d));
    const bool better = score > best_score ||
                        (score == best_score && (d < best_d || (d == best_d && c.id < *best)));
    if (!best || better) {
      best = c.id;
      best_score = score;
      best_d = d;
    }
  }
  return best;
}

RelayPlan build_relay_plan(const Scenario& scenario, std::span<const double> sinr_db,
                           std::span<const int> access_points, const RelayParams& params) {
  if (sinr_db.size() != scenario.vehicles.size())
    throw std::invalid_argument("build_relay_plan: one SINR per vehicle expected");
  std::vector<int> aps(access_points.begin(), access_points.end());
  std::sort(aps.begin(), aps.end());
  const auto is_ap = [&](int id) { return std::binary_search(aps.begin(), aps.end(), id); };

  std::vector<int> video;
  for (const auto& v : scenario.vehicles)
    if (v.wants_video && !is_ap(v.id)) video.push_back(v.id);
  const auto low = identify_low_sinr(video, sinr_db, params.low_sinr_threshold_db);

  std::vector<RelayCandidate> candidates;
  for (int id : video) {
    if (std::binary_search(low.begin(), low.end(), id)) continue;
    const auto& v = scenario.vehicles[static_cast<std::size_t>(id)];
    candidates.push_back({id, sinr_db[static_cast<std::size_t>(id)], v.position, 0});
  }

  RelayPlan plan;
  for (int id : low) {
    const auto& v = scenario.vehicles[static_cast<std::size_t>(id)];
    const auto relay = select_relay(v.position, candidates, params, scenario.highway_length);
    if (!relay) continue;
    plan.relay_of[id] = *relay;
    for (auto& c : candidates)
      if (c.id == *relay) ++c.clients;
  }
  return plan;
}

RelayOutcome relay_delivery(std::int64_t bits, HopResult hop1, std::optional<HopResult> hop2,
                            int forward_delay_ttis) {
  RelayOutcome out;
  out.latency_ttis = hop1.ttis;
  if (!hop1.ack || !hop2) return out;
  out.latency_ttis += forward_delay_ttis + hop2->ttis;
  out.delivered = hop2->ack;
  out.bits = out.delivered ? bits : 0;
  return out;
}

}  // namespace v2x
