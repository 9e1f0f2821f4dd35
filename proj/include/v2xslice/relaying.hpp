#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "v2xslice/scenario.hpp"

namespace v2x {

struct RelayParams {
  double low_sinr_threshold_db = 0.0;
  double max_range_m = 150.0;
  int max_clients = 4;
  double kappa_db_per_m = 0.1;  // weight of the proximity term in the relay score
};

struct RelayPlan {
  std::map<int, int> relay_of;  // low-SINR vehicle id -> relay vehicle id

  [[nodiscard]] int clients_of(int relay_id) const;
  [[nodiscard]] std::vector<int> relays() const;  // ascending, unique
};

// Video vehicles among `video_ids` with wideband V2I SINR below threshold, by id.
// `sinr_db` is indexed by vehicle id.
std::vector<int> identify_low_sinr(std::span<const int> video_ids, std::span<const double> sinr_db,
                                   double threshold_db);

struct RelayCandidate {
  int id = 0;
  double sinr_v2i_db = 0.0;
  Position position;
  int clients = 0;
};

/// Best relay for one low-SINR vehicle: maximises
/// min(sinr - threshold, kappa * (max_range - distance)) over candidates in
/// range with spare client slots; ties go to the nearer, then lower id.
std::optional<int> select_relay(const Position& low_vehicle,
                                std::span<const RelayCandidate> candidates,
                                const RelayParams& params, double highway_length);

/// Relay plan for one re-slice. Candidates are video vehicles that are neither
/// low-SINR nor in `access_points`; low-SINR vehicles that are themselves
/// access points are not relayed.
RelayPlan build_relay_plan(const Scenario& scenario, std::span<const double> sinr_db,
                           std::span<const int> access_points, const RelayParams& params);

struct HopResult {
  bool ack = false;
  int ttis = 1;  // TTIs from first transmission to the final decode, inclusive
};

struct RelayOutcome {
  bool delivered = false;
  std::int64_t bits = 0;
  int latency_ttis = 0;
};

// Two-hop store-and-forward delivery; hop 2 only runs when hop 1 succeeded.
RelayOutcome relay_delivery(std::int64_t bits, HopResult hop1, std::optional<HopResult> hop2,
                            int forward_delay_ttis = 1);

}  // namespace v2x
