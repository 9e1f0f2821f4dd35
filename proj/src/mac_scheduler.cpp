#include "v2xslice/mac_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2x {

TrafficProfile safety_profile(std::int64_t phase_ms) {
  return {TrafficKind::Safety, 12800, 100, 100, phase_ms};
}

TrafficProfile video_profile(std::int64_t phase_ms) {
  return {TrafficKind::Video, 1000, 1, 0, phase_ms};
}

TrafficFlow::TrafficFlow(int id, TrafficProfile profile)
    : id_(id), profile_(profile), next_arrival_ms_(profile.phase_ms) {
  if (profile_.period_ms <= 0) throw std::invalid_argument("traffic period must be positive");
}

std::vector<Packet> TrafficFlow::generate(std::int64_t now_ms) {
  std::vector<Packet> out;
  if (profile_.packet_bits <= 0) return out;
  while (next_arrival_ms_ <= now_ms) {
    Packet p;
    p.id = next_id_;
    p.origin_id = next_id_;
    p.bits = profile_.packet_bits;
    p.arrival_ms = next_arrival_ms_;
    p.deadline_ms = profile_.deadline_ms > 0 ? next_arrival_ms_ + profile_.deadline_ms : kNoDeadline;
    next_arrival_ms_ += profile_.period_ms;
    out.push_back(p);
    enqueue(p);
  }
  return out;
}

std::int64_t TrafficFlow::enqueue(Packet p) {
  p.id = next_id_++;
  p.unsent_bits = p.bits;
  p.acked_bits = 0;
  p.finished = false;
  ledger_.generated_bits += p.bits;
  ++ledger_.generated_packets;
  unsent_bits_ += p.bits;
  live_.push_back(p);
  return p.id;
}

Packet* TrafficFlow::find(std::int64_t packet_id) {
  if (live_.empty()) return nullptr;
  const std::int64_t off = packet_id - live_.front().id;
  if (off < 0 || off >= static_cast<std::int64_t>(live_.size())) return nullptr;
  Packet& p = live_[static_cast<std::size_t>(off)];
  return p.finished ? nullptr : &p;
}

bool TrafficFlow::is_live(std::int64_t packet_id) const {
  if (live_.empty()) return false;
  const std::int64_t off = packet_id - live_.front().id;
  if (off < 0 || off >= static_cast<std::int64_t>(live_.size())) return false;
  return !live_[static_cast<std::size_t>(off)].finished;
}

void TrafficFlow::finish(Packet& p, PacketFate fate, std::int64_t now_ms,
                         std::vector<PacketOutcome>& out) {
  unsent_bits_ -= p.unsent_bits;
  p.unsent_bits = 0;
  p.finished = true;
  switch (fate) {
    case PacketFate::Delivered:
      ledger_.delivered_bits += p.bits;
      ++ledger_.delivered_packets;
      break;
    case PacketFate::Expired:
      ledger_.expired_bits += p.bits;
      ++ledger_.expired_packets;
      break;
    case PacketFate::HarqDropped:
      ledger_.dropped_bits += p.bits;
      ++ledger_.dropped_packets;
      break;
  }
  out.push_back({p, fate, now_ms});
}

void TrafficFlow::compact() {
  while (!live_.empty() && live_.front().finished) {
    live_.pop_front();
    if (cursor_ > 0) --cursor_;
  }
}

std::vector<Segment> TrafficFlow::pull(std::int64_t max_bits) {
  std::vector<Segment> segs;
  while (max_bits > 0 && cursor_ < live_.size()) {
    Packet& p = live_[cursor_];
    if (p.finished || p.unsent_bits == 0) {
      ++cursor_;
      continue;
    }
    const std::int64_t take = std::min(max_bits, p.unsent_bits);
    p.unsent_bits -= take;
    unsent_bits_ -= take;
    max_bits -= take;
    segs.push_back({p.id, take});
    if (p.unsent_bits == 0) ++cursor_;
  }
  return segs;
}

std::vector<PacketOutcome> TrafficFlow::ack(std::span<const Segment> segments, std::int64_t now_ms) {
  std::vector<PacketOutcome> out;
  for (const auto& s : segments) {
    Packet* p = find(s.packet_id);
    if (p == nullptr) continue;  // already expired or dropped
    p->acked_bits += s.bits;
    if (p->acked_bits == p->bits)
      finish(*p, now_ms > p->deadline_ms ? PacketFate::Expired : PacketFate::Delivered, now_ms, out);
  }
  compact();
  return out;
}

std::vector<PacketOutcome> TrafficFlow::drop(std::span<const Segment> segments, std::int64_t now_ms) {
  std::vector<PacketOutcome> out;
  for (const auto& s : segments) {
    Packet* p = find(s.packet_id);
    if (p == nullptr) continue;
    finish(*p, PacketFate::HarqDropped, now_ms, out);
  }
  compact();
  return out;
}

std::vector<PacketOutcome> TrafficFlow::expire(std::int64_t now_ms) {
  std::vector<PacketOutcome> out;
  if (profile_.deadline_ms <= 0) return out;
  for (auto& p : live_) {
    if (!p.finished && now_ms + 1 > p.deadline_ms) finish(p, PacketFate::Expired, now_ms, out);
  }
  compact();
  return out;
}

PacketOutcome TrafficFlow::deliver_locally(const Packet& packet, std::int64_t now_ms) {
  Packet* p = find(packet.id);
  if (p == nullptr) throw std::invalid_argument("deliver_locally: packet is not live");
  std::vector<PacketOutcome> out;
  p->acked_bits = p->bits;
  finish(*p, PacketFate::Delivered, now_ms, out);
  compact();
  return out.front();
}

std::int64_t TrafficFlow::in_queue_bits() const {
  std::int64_t s = 0;
  for (const auto& p : live_)
    if (!p.finished) s += p.bits;
  return s;
}

bool TrafficFlow::balanced() const {
  return ledger_.generated_bits == ledger_.delivered_bits + ledger_.expired_bits +
                                       ledger_.dropped_bits + in_queue_bits();
}

// ------------------------------------------------------------------------ PF

double pf_metric(double inst_rate, double avg_rate) {
  return inst_rate / std::max(avg_rate, kRateFloor);
}

PfState update_pf(PfState s, double served_bits, double dt_s) {
  if (!(dt_s > 0)) throw std::invalid_argument("update_pf: dt must be positive");
  s.avg_rate = std::max(kRateFloor, (1.0 - s.alpha) * s.avg_rate + s.alpha * (served_bits / dt_s));
  return s;
}

int PrbAllocation::prbs_of(int flow_index) const {
  return static_cast<int>(std::count(owner.begin(), owner.end(), flow_index));
}

std::vector<int> PrbAllocation::prb_list(int flow_index) const {
  std::vector<int> out;
  for (std::size_t p = 0; p < owner.size(); ++p)
    if (owner[p] == flow_index) out.push_back(static_cast<int>(p));
  return out;
}

PrbAllocation schedule_tti(std::span<const SchedulableFlow> flows,
                           std::span<const double> per_prb_rates, int prb_count,
                           std::span<const std::uint8_t> reserved, std::int64_t tti) {
  if (prb_count <= 0) throw std::invalid_argument("schedule_tti: prb_count must be positive");
  if (per_prb_rates.size() != flows.size() * static_cast<std::size_t>(prb_count))
    throw std::invalid_argument("schedule_tti: rate matrix must be flows x prb_count");
  PrbAllocation alloc;
  alloc.tti = tti;
  alloc.owner.assign(static_cast<std::size_t>(prb_count), kFreePrb);

  std::vector<double> remaining(flows.size());
  for (std::size_t f = 0; f < flows.size(); ++f) remaining[f] = static_cast<double>(flows[f].backlog_bits);

  for (int p = 0; p < prb_count; ++p) {
    if (!reserved.empty() && reserved[static_cast<std::size_t>(p)]) {
      alloc.owner[static_cast<std::size_t>(p)] = kReservedPrb;
      continue;
    }
    int best = -1;
    double best_metric = 0.0;
    for (std::size_t f = 0; f < flows.size(); ++f) {
      if (remaining[f] <= 0.0) continue;
      const double rate = per_prb_rates[f * static_cast<std::size_t>(prb_count) + p];
      const double m = pf_metric(rate, flows[f].avg_rate);
      if (m <= 0.0) continue;
      if (best < 0 || m > best_metric ||
          (m == best_metric && flows[f].id < flows[static_cast<std::size_t>(best)].id)) {
        best = static_cast<int>(f);
        best_metric = m;
      }
    }
    if (best < 0) continue;
    alloc.owner[static_cast<std::size_t>(p)] = best;
    remaining[static_cast<std::size_t>(best)] -=
        per_prb_rates[static_cast<std::size_t>(best) * prb_count + p];
  }
  return alloc;
}

std::vector<int> reserve_prbs(std::vector<std::uint8_t>& reserved, int count) {
  std::vector<int> out;
  for (std::size_t p = 0; p < reserved.size() && static_cast<int>(out.size()) < count; ++p) {
    if (!reserved[p]) {
      reserved[p] = 1;
      out.push_back(static_cast<int>(p));
    }
  }
  return out;
}

double bits_per_prb(const McsEntry& mcs, double overhead) {
  return mcs.spectral_efficiency * kSubcarriersPerPrb * kSymbolsPerTti * (1.0 - overhead);
}

std::int64_t tb_bits(const McsEntry& mcs, int n_prb, double overhead) {
  if (n_prb < 1) throw std::invalid_argument("tb_bits: n_prb must be >= 1");
  return static_cast<std::int64_t>(std::floor(bits_per_prb(mcs, overhead) * n_prb + 1e-9));
}

}  // namespace v2x
