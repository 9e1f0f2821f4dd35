#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "v2xslice/link_abstraction.hpp"

namespace v2x {

enum class TrafficKind { Safety, Video };

inline constexpr std::int64_t kNoDeadline = std::numeric_limits<std::int64_t>::max();

struct TrafficProfile {
  TrafficKind kind = TrafficKind::Video;
  std::int64_t packet_bits = 0;
  std::int64_t period_ms = 1;
  std::int64_t deadline_ms = 0;  // relative; 0 means none
  std::int64_t phase_ms = 0;     // first arrival
};

// 1600-byte messages every 100 ms with a 100 ms delivery deadline.
TrafficProfile safety_profile(std::int64_t phase_ms = 0);
// 1000-bit packets every 1 ms (1000 kbps constant bit rate).
TrafficProfile video_profile(std::int64_t phase_ms = 0);

struct Packet {
  std::int64_t id = 0;         // flow-local sequence number
  std::int64_t origin_id = 0;  // id at the source flow (relay hop 2 keeps it)
  std::int64_t bits = 0;
  std::int64_t arrival_ms = 0;
  std::int64_t deadline_ms = kNoDeadline;  // absolute
  int tag = -1;  // caller data, e.g. the transmitter at generation
  std::int64_t unsent_bits = 0;
  std::int64_t acked_bits = 0;
  bool finished = false;
};

struct Segment {
  std::int64_t packet_id = 0;
  std::int64_t bits = 0;
};

enum class PacketFate { Delivered, Expired, HarqDropped };

struct PacketOutcome {
  Packet packet;
  PacketFate fate = PacketFate::Delivered;
  std::int64_t done_ms = 0;
};

struct FlowLedger {
  std::int64_t generated_bits = 0;
  std::int64_t delivered_bits = 0;
  std::int64_t expired_bits = 0;
  std::int64_t dropped_bits = 0;
  std::int64_t generated_packets = 0;
  std::int64_t delivered_packets = 0;
  std::int64_t expired_packets = 0;
  std::int64_t dropped_packets = 0;
};

/// Queue and packet lifecycle of one traffic flow at one hop.
///
/// Packets are segmented into transport blocks oldest first. A packet is
/// delivered once every bit has been acknowledged, dropped as soon as any of
/// its segments exhausts HARQ, and expired when it can no longer finish by its
/// deadline. Delivery at `done_ms` later than the deadline counts as expired.
class TrafficFlow {
 public:
  TrafficFlow() = default;
  TrafficFlow(int id, TrafficProfile profile);

  // Enqueues every arrival with time <= now_ms not yet generated.
  std::vector<Packet> generate(std::int64_t now_ms);
  // Enqueues an externally produced packet (relay forwarding). Counts as
  // generated. Returns the flow-local id it was given.
  std::int64_t enqueue(Packet p);

  [[nodiscard]] std::int64_t backlog_bits() const { return unsent_bits_; }
  [[nodiscard]] bool has_live_packets() const { return !live_.empty(); }
  [[nodiscard]] bool is_live(std::int64_t packet_id) const;

  std::vector<Segment> pull(std::int64_t max_bits);
  std::vector<PacketOutcome> ack(std::span<const Segment> segments, std::int64_t now_ms);
  std::vector<PacketOutcome> drop(std::span<const Segment> segments, std::int64_t now_ms);
  // Expires packets that would miss their deadline if delivered at now_ms + 1.
  std::vector<PacketOutcome> expire(std::int64_t now_ms);
  // Delivers a whole packet without transmission (self-served safety message).
  PacketOutcome deliver_locally(const Packet& p, std::int64_t now_ms);

  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] const TrafficProfile& profile() const { return profile_; }
  [[nodiscard]] const FlowLedger& ledger() const { return ledger_; }
  [[nodiscard]] std::int64_t in_queue_bits() const;
  [[nodiscard]] bool balanced() const;
  [[nodiscard]] std::int64_t next_arrival_ms() const { return next_arrival_ms_; }

 private:
  Packet* find(std::int64_t packet_id);
  void finish(Packet& p, PacketFate fate, std::int64_t now_ms, std::vector<PacketOutcome>& out);
  void compact();

  int id_ = -1;
  TrafficProfile profile_;
  std::deque<Packet> live_;
  std::int64_t next_id_ = 0;
  std::int64_t next_arrival_ms_ = 0;
  std::int64_t unsent_bits_ = 0;
  std::size_t cursor_ = 0;  // first live packet that may have unsent bits
  FlowLedger ledger_;
};

// --------------------------------------------------------------- PF scheduling

inline constexpr double kRateFloor = 1.0;  // bits/s

struct PfState {
  double avg_rate = kRateFloor;  // bits/s
  double alpha = 0.01;
};

double pf_metric(double inst_rate, double avg_rate);
PfState update_pf(PfState state, double served_bits, double dt_s);

struct SchedulableFlow {
  int id = 0;
  std::int64_t backlog_bits = 0;
  double avg_rate = kRateFloor;
};

inline constexpr int kFreePrb = -1;
inline constexpr int kReservedPrb = -2;

struct PrbAllocation {
  std::int64_t tti = 0;
  std::vector<int> owner;  // per PRB: index into the flow list, kFreePrb or kReservedPrb

  [[nodiscard]] int prbs_of(int flow_index) const;
  [[nodiscard]] std::vector<int> prb_list(int flow_index) const;
};

/// Per-PRB proportional fair allocation.
///
/// `per_prb_rates` is row-major flows x prb_count, bits per PRB per TTI. Each
/// free PRB goes to the backlogged flow with the largest rate/avg_rate, ties to
/// the lowest flow id; a flow stops competing once the PRBs it already holds
/// cover its backlog. PRBs flagged in `reserved` (HARQ retransmissions) are
/// left untouched.
PrbAllocation schedule_tti(std::span<const SchedulableFlow> flows,
                           std::span<const double> per_prb_rates, int prb_count,
                           std::span<const std::uint8_t> reserved = {}, std::int64_t tti = 0);

// Reserves `count` free PRBs lowest index first; returns them (fewer if full).
std::vector<int> reserve_prbs(std::vector<std::uint8_t>& reserved, int count);

inline constexpr int kSubcarriersPerPrb = 12;
inline constexpr int kSymbolsPerTti = 14;

// Unfloored payload bits carried by one PRB.
double bits_per_prb(const McsEntry& mcs, double overhead = 0.25);
std::int64_t tb_bits(const McsEntry& mcs, int n_prb, double overhead = 0.25);

}  // namespace v2x
