#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "v2xslice/config.hpp"
#include "v2xslice/link_abstraction.hpp"
#include "v2xslice/metrics.hpp"

namespace v2x {

struct LinkModel {
  McsTable mcs;
  MiCurves mi;
  BlerCurve bler;
  std::string mcs_sha256;
  std::string mi_sha256;
};

// Loads and hash-checks the data files named by the config.
LinkModel load_link_model(const SimConfig& cfg);

// Debug CSV streams; null members are skipped.
struct TraceSinks {
  std::ostream* sinr = nullptr;        // tti,tx,rx,band,prb,sinr_db
  std::ostream* plans = nullptr;       // time_ms,ap_id,f,ap_count,assigned
  std::ostream* relays = nullptr;      // time_ms,client_id,relay_id
  std::ostream* deliveries = nullptr;  // flow,role,tx,rx,packet,arrival_ms,done_ms,fate
  std::ostream* association = nullptr;  // time_ms,vehicle,x,rsu,sinr_db,video
};

struct RunStats {
  int vehicles = 0;
  int video_vehicles = 0;
  std::vector<int> ap_counts;     // |S| per re-slice (slicing modes)
  std::vector<int> relay_counts;  // relayed vehicles per re-slice (relay modes)
  std::int64_t transmissions = 0;
  std::int64_t retransmissions = 0;
  std::int64_t harq_drops = 0;
  std::int64_t generated_bits = 0;
  std::int64_t delivered_bits = 0;
  bool plans_built = false;
};

struct RunResult {
  MetricsAccumulator metrics;
  RunStats stats;
};

/// One drop, one technology. Throws InvariantViolation when a runtime check
/// fails (traffic conservation, plan totality, relay/AP disjointness).
RunResult simulate(const SimConfig& cfg, const LinkModel& model, const TraceSinks& trace = {});

double median(std::vector<int> v);

}  // namespace v2x
