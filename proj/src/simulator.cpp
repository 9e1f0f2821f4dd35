#include "v2xslice/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <unordered_map>

#include "v2xslice/channel.hpp"
#include "v2xslice/errors.hpp"
#include "v2xslice/mac_scheduler.hpp"
#include "v2xslice/relaying.hpp"
#include "v2xslice/scenario.hpp"
#include "v2xslice/slicing.hpp"

namespace v2x {

LinkModel load_link_model(const SimConfig& cfg) {
  LinkModel m;
  const auto mcs_path = resolved_mcs_path(cfg);
  const auto mi_path = resolved_mi_path(cfg);
  m.mcs_sha256 = sha256_file(mcs_path);
  m.mi_sha256 = sha256_file(mi_path);
  if (!cfg.mcs_table_sha256.empty() && cfg.mcs_table_sha256 != m.mcs_sha256)
    throw ConfigError("mcs_table: SHA-256 mismatch for " + mcs_path.string());
  if (!cfg.mi_curves_sha256.empty() && cfg.mi_curves_sha256 != m.mi_sha256)
    throw ConfigError("mi_curves: SHA-256 mismatch for " + mi_path.string());
  m.mcs = McsTable::load(mcs_path);
  m.mi = MiCurves::load(mi_path);
  m.bler.slope_per_db = cfg.bler_slope_per_db;
  return m;
}

double median(std::vector<int> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

// Hop1 carries a relayed vehicle's video from the RSU to its relay, Hop2 from
// the relay to the vehicle.
enum class Role { Safety, Video, Hop1, Hop2 };

const char* role_name(Role r) {
  switch (r) {
    case Role::Safety: return "safety";
    case Role::Video: return "video";
    case Role::Hop1: return "hop1";
    case Role::Hop2: return "hop2";
  }
  return "?";
}

const char* fate_name(PacketFate f) {
  switch (f) {
    case PacketFate::Delivered: return "delivered";
    case PacketFate::Expired: return "expired";
    case PacketFate::HarqDropped: return "harq_dropped";
  }
  return "?";
}

struct FlowKey {
  int tx = -1;  // node, -1 when nobody can serve it
  int rx = 0;
  int client = 0;  // vehicle the traffic is for
  Role role = Role::Safety;
  auto operator<=>(const FlowKey&) const = default;
};

struct Flow {
  FlowKey key;
  Band band = Band::V2I;
  TrafficFlow queue;
  PfState pf;
  int pending_harq = 0;
  std::int64_t served_now = 0;
  bool listed = false;   // in its transmitter's pool
  bool expiring = false;  // in safety_flows_
};

struct HarqJob {
  int flow = 0;
  std::int64_t due = 0;
  std::int64_t first_tti = 0;
  int mcs = 0;
  int n_prb = 0;
  std::vector<Segment> segs;
  HarqProcess proc;
};

struct Transmitter {
  int node = 0;
  Band band = Band::V2I;
  std::vector<int> flows;
  std::vector<HarqJob> harq;
};

struct Transmission {
  int tx = 0;
  int flow = 0;
  std::int64_t first_tti = 0;
  int mcs = 0;
  std::vector<int> prbs;
  std::vector<Segment> segs;
  HarqProcess proc;
};

struct PrrGroup {
  int intended = 0;
  int successes = 0;
  int finalized = 0;
};

struct Forward {
  std::int64_t ready = 0;
  int relay = 0;
  int client = 0;
  Packet packet;
};

struct InterfererCtx {
  int node = 0;
  double power = 0.0;  // tx power x path gain at the receiver, mW
  RngStream fading;
};

constexpr int kNoTx = -1;

class Engine {
 public:
  Engine(const SimConfig& cfg, const LinkModel& model, const TraceSinks& trace)
      : cfg_(cfg), model_(model), trace_(trace), root_(cfg.seed) {
    fading_ = root_.substream("fading");
    harq_rng_ = root_.substream("harq");
    slicing_rng_ = root_.substream("slicing");
    P_ = cfg.prb_count;
    noise_ = cfg.noise_per_prb_mw();
    p_v2i_ = cfg.v2i_tx_per_prb_mw();
    p_v2v_ = cfg.v2v_tx_per_prb_mw();
    window_end_ = cfg.duration_ms - cfg.drain_ms;
    all_prbs_.resize(static_cast<std::size_t>(P_));
    for (int p = 0; p < P_; ++p) all_prbs_[static_cast<std::size_t>(p)] = p;
    for (auto* act : {&act_now_, &act_prev_})
      for (auto& band : *act) band.assign(static_cast<std::size_t>(P_), {});
  }

  RunResult run();

 private:
  // ---- geometry
  [[nodiscard]] bool is_rsu(int node) const { return node >= n_veh_; }
  [[nodiscard]] const Position& pos(int node) const {
    return is_rsu(node) ? scenario_.rsus[static_cast<std::size_t>(node - n_veh_)].position
                        : scenario_.vehicles[static_cast<std::size_t>(node)].position;
  }
  [[nodiscard]] double tx_power(int node) const { return is_rsu(node) ? p_v2i_ : p_v2v_; }
  [[nodiscard]] double path_gain(Band band, int tx, int rx) const {
    const double d = distance(pos(tx), pos(rx), scenario_.highway_length);
    const double pl = band == Band::V2I ? pathloss_v2i(d, cfg_.pathloss) : pathloss_v2v(d, cfg_.pathloss);
    return db_to_linear(-pl);
  }
  [[nodiscard]] RngStream link_fading(Band band, std::int64_t tti, int tx, int rx) const {
    const std::int64_t block = tti < 0 ? -1 : tti / cfg_.coherence_ttis;
    return fading_.substream({static_cast<std::uint64_t>(band), static_cast<std::uint64_t>(block),
                              static_cast<std::uint64_t>(tx), static_cast<std::uint64_t>(rx)});
  }

  using Activity = std::array<std::vector<std::vector<int>>, 2>;
  void link_sinr(Band band, int tx, int rx, std::int64_t tti, const Activity& act,
                 std::span<const int> prbs, std::vector<double>& out);
  const CqiReport& cqi(Band band, int tx, int rx, std::int64_t t);

  // ---- flows
  int flow_for(const FlowKey& key, Band band);
  int transmitter_for(int node, Band band);
  void handle(int flow_index, const std::vector<PacketOutcome>& outcomes);
  int prr_group(int tx, std::int64_t arrival);

  // ---- phases
  void reslice(std::int64_t t);
  void forward_ready(std::int64_t t);
  void generate(std::int64_t t);
  void expire(std::int64_t t);
  void schedule(int ti, std::int64_t t);
  void decode(std::int64_t t);
  void update_pf();
  RunResult finish();

  const SimConfig& cfg_;
  const LinkModel& model_;
  const TraceSinks& trace_;
  RngStream root_, fading_, harq_rng_, slicing_rng_;
  int P_ = 50;
  double noise_ = 0, p_v2i_ = 0, p_v2v_ = 0;
  std::int64_t window_end_ = 0;
  std::int64_t now_ = 0;
  std::vector<int> all_prbs_;

  Scenario scenario_;
  int n_veh_ = 0;
  std::vector<int> assoc_;       // vehicle -> RSU node
  std::vector<double> sinr_db_;  // wideband V2I, by vehicle
  std::vector<int> phase_;       // safety arrival offset within the period
  std::vector<int> safety_tx_;   // current safety transmitter per vehicle
  std::vector<int> cur_safety_, cur_video_;
  AccessPointPlan plan_;
  bool have_plan_ = false;
  RelayPlan relay_plan_;

  std::vector<Flow> flows_;
  std::map<FlowKey, int> flow_index_;
  std::vector<Transmitter> txs_;
  std::vector<int> tx_of_node_[2];
  std::vector<int> safety_flows_;
  std::deque<Forward> forwards_;
  std::map<std::pair<int, std::int64_t>, int> group_index_;
  std::vector<PrrGroup> groups_;

  std::vector<std::int64_t> safety_bits_, safety_window_bits_, video_bits_, video_window_bits_;
  std::int64_t source_bits_ = 0;

  Activity act_now_, act_prev_;
  std::vector<Transmission> tx_now_;
  std::unordered_map<std::uint64_t, CqiReport> cqi_cache_;
  std::vector<InterfererCtx> ctx_;
  std::vector<double> sinr_buf_, rates_buf_;
  std::vector<std::uint8_t> reserved_;

  RunStats stats_;
};

void Engine::link_sinr(Band band, int tx, int rx, std::int64_t tti, const Activity& act,
                       std::span<const int> prbs, std::vector<double>& out) {
  const auto& active = act[static_cast<std::size_t>(band)];
  const double base = tx_power(tx) * path_gain(band, tx, rx);
  const RngStream h = link_fading(band, tti, tx, rx);
  ctx_.clear();
  out.resize(prbs.size());
  for (std::size_t k = 0; k < prbs.size(); ++k) {
    const int p = prbs[k];
    std::array<double, kRxAntennas> interference{};
    for (int i : active[static_cast<std::size_t>(p)]) {
      if (i == tx || i == rx) continue;
      auto it = std::find_if(ctx_.begin(), ctx_.end(), [i](const InterfererCtx& c) { return c.node == i; });
      if (it == ctx_.end()) {
        ctx_.push_back({i, tx_power(i) * path_gain(band, i, rx), link_fading(band, tti, i, rx)});
        it = ctx_.end() - 1;
      }
      for (int a = 0; a < kRxAntennas; ++a)
        interference[static_cast<std::size_t>(a)] += it->power * fading_power_at(it->fading, a, p, P_);
    }
    double s = 0.0;
    for (int a = 0; a < kRxAntennas; ++a)
      s += base * fading_power_at(h, a, p, P_) / (interference[static_cast<std::size_t>(a)] + noise_);
    out[k] = s;
  }
}

// Wideband report from the previous TTI's fading and interference.
const CqiReport& Engine::cqi(Band band, int tx, int rx, std::int64_t t) {
  const std::uint64_t key = (static_cast<std::uint64_t>(tx) << 32) | static_cast<std::uint32_t>(rx);
  auto it = cqi_cache_.find(key);
  if (it != cqi_cache_.end()) return it->second;
  link_sinr(band, tx, rx, t - 1, act_prev_, all_prbs_, sinr_buf_);
  return cqi_cache_.emplace(key, make_cqi(sinr_buf_, model_.mi)).first->second;
}

int Engine::transmitter_for(int node, Band band) {
  auto& map = tx_of_node_[static_cast<std::size_t>(band)];
  int& ti = map[static_cast<std::size_t>(node)];
  if (ti < 0) {
    ti = static_cast<int>(txs_.size());
    txs_.push_back({node, band, {}, {}});
  }
  return ti;
}

int Engine::flow_for(const FlowKey& key, Band band) {
  auto it = flow_index_.find(key);
  int fi;
  if (it == flow_index_.end()) {
    fi = static_cast<int>(flows_.size());
    Flow f;
    f.key = key;
    f.band = band;
    f.queue = TrafficFlow(fi, key.role == Role::Safety ? safety_profile() : video_profile());
    f.pf.alpha = cfg_.pf_alpha;
    flows_.push_back(std::move(f));
    flow_index_.emplace(key, fi);
  } else {
    fi = it->second;
  }
  Flow& f = flows_[static_cast<std::size_t>(fi)];
  if (key.role == Role::Safety && !f.expiring) {
    safety_flows_.push_back(fi);
    f.expiring = true;
  }
  // Self-delivered and unserved flows never enter a scheduler pool.
  if (!f.listed && key.tx != kNoTx && key.tx != key.rx) {
    txs_[static_cast<std::size_t>(transmitter_for(key.tx, band))].flows.push_back(fi);
    f.listed = true;
  }
  return fi;
}

int Engine::prr_group(int tx, std::int64_t arrival) {
  const auto key = std::make_pair(tx, arrival / cfg_.prr_window_ms);
  auto it = group_index_.find(key);
  if (it != group_index_.end()) return it->second;
  const int g = static_cast<int>(groups_.size());
  groups_.push_back({});
  group_index_.emplace(key, g);
  return g;
}

void Engine::handle(int fi, const std::vector<PacketOutcome>& outcomes) {
  const Flow& f = flows_[static_cast<std::size_t>(fi)];
  for (const auto& o : outcomes) {
    if (trace_.deliveries) {
      *trace_.deliveries << fi << ',' << role_name(f.key.role) << ',' << f.key.tx << ',' << f.key.rx
                         << ',' << o.packet.origin_id << ',' << o.packet.arrival_ms << ','
                         << o.done_ms << ',' << fate_name(o.fate) << '\n';
    }
    const bool delivered = o.fate == PacketFate::Delivered;
    const bool in_window = o.packet.arrival_ms < window_end_;
    const auto v = static_cast<std::size_t>(f.key.client);
    switch (f.key.role) {
      case Role::Safety:
        if (delivered) {
          safety_bits_[v] += o.packet.bits;
          if (in_window) safety_window_bits_[v] += o.packet.bits;
        }
        if (o.packet.tag >= 0) {
          auto& g = groups_[static_cast<std::size_t>(o.packet.tag)];
          ++g.finalized;
          if (delivered) ++g.successes;
        }
        break;
      case Role::Video:
      case Role::Hop2:
        if (delivered) {
          video_bits_[v] += o.packet.bits;
          if (in_window) video_window_bits_[v] += o.packet.bits;
        }
        break;
      case Role::Hop1:
        // Store and forward: decoded at the end of TTI now_, sent from now_ + 2.
        if (delivered) forwards_.push_back({now_ + 2, f.key.rx, f.key.client, o.packet});
        break;
    }
  }
}

void Engine::reslice(std::int64_t t) {
  for (int v = 0; v < n_veh_; ++v) {
    int best = -1;
    double best_gain = -1.0;
    double total = 0.0;
    for (std::size_t r = 0; r < scenario_.rsus.size(); ++r) {
      const int node = n_veh_ + static_cast<int>(r);
      const double g = p_v2i_ * path_gain(Band::V2I, node, v);
      total += g;
      if (g > best_gain) {
        best_gain = g;
        best = node;
      }
    }
    assoc_[static_cast<std::size_t>(v)] = best;
    sinr_db_[static_cast<std::size_t>(v)] =
        linear_to_db(kRxAntennas * best_gain / (total - best_gain + noise_));
    if (trace_.association) {
      const auto& veh = scenario_.vehicles[static_cast<std::size_t>(v)];
      *trace_.association << t << ',' << v << ',' << veh.position.x << ',' << best - n_veh_ << ','
                          << sinr_db_[static_cast<std::size_t>(v)] << ',' << (veh.wants_video ? 1 : 0)
                          << '\n';
    }
  }

  if (uses_slicing(cfg_.technology)) {
    auto eligible = eligible_aps(scenario_, sinr_db_, cfg_.eligibility_threshold_db);
    if (eligible.empty()) {
      for (const auto& veh : scenario_.vehicles)
        if (veh.wants_video) eligible.push_back(veh.id);
    }
    have_plan_ = !eligible.empty();
    if (have_plan_) {
      RngStream rng = slicing_rng_.substream({static_cast<std::uint64_t>(t)});
      plan_ = build_plan(scenario_, eligible, cfg_.slicing, t, rng);
      stats_.plans_built = true;
      stats_.ap_counts.push_back(static_cast<int>(plan_.access_points.size()));
      for (int ap : plan_.access_points)
        check_invariant(std::binary_search(eligible.begin(), eligible.end(), ap),
                        "access point outside the eligible set");
      check_invariant(plan_.assignment.size() + plan_.access_points.size() ==
                          scenario_.vehicles.size(),
                      "access point plan does not cover every vehicle");
      if (trace_.plans) {
        std::map<int, std::vector<int>> members;
        for (const auto& [veh, ap] : plan_.assignment) members[ap].push_back(veh);
        for (int ap : plan_.access_points) {
          *trace_.plans << t << ',' << ap << ',' << plan_.f << ',' << plan_.access_points.size() << ',';
          const auto& m = members[ap];
          for (std::size_t i = 0; i < m.size(); ++i) *trace_.plans << (i ? " " : "") << m[i];
          *trace_.plans << '\n';
        }
      }
    }
  }

  if (uses_relaying(cfg_.technology)) {
    std::vector<int> aps;
    if (have_plan_) aps = plan_.access_points;
    relay_plan_ = build_relay_plan(scenario_, sinr_db_, aps, cfg_.relay);
    for (const auto& [client, relay] : relay_plan_.relay_of) {
      check_invariant(client != relay, "vehicle relays for itself");
      check_invariant(!std::binary_search(aps.begin(), aps.end(), relay),
                      "relay is also a slice access point");
      check_invariant(relay_plan_.clients_of(relay) <= cfg_.relay.max_clients,
                      "relay exceeds its client limit");
      if (trace_.relays) *trace_.relays << t << ',' << client << ',' << relay << '\n';
    }
    stats_.relay_counts.push_back(static_cast<int>(relay_plan_.relay_of.size()));
  }

  for (int v = 0; v < n_veh_; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    int tx = kNoTx;
    if (!uses_slicing(cfg_.technology)) {
      tx = assoc_[vi];
    } else if (have_plan_) {
      if (plan_.is_access_point(v)) {
        tx = v;
      } else {
        tx = plan_.assignment.at(v);
      }
    }
    safety_tx_[vi] = tx;
    cur_safety_[vi] = flow_for({tx, v, v, Role::Safety}, tx != kNoTx && is_rsu(tx) ? Band::V2I : Band::V2V);
    if (scenario_.vehicles[vi].wants_video) {
      auto rel = relay_plan_.relay_of.find(v);
      if (rel != relay_plan_.relay_of.end()) {
        const int r = rel->second;
        cur_video_[vi] = flow_for({assoc_[static_cast<std::size_t>(r)], r, v, Role::Hop1}, Band::V2I);
      } else {
        cur_video_[vi] = flow_for({assoc_[vi], v, v, Role::Video}, Band::V2I);
      }
    }
  }

  // Drop idle flows that no longer receive traffic from transmitter pools.
  std::vector<char> current(flows_.size(), 0);
  for (int v = 0; v < n_veh_; ++v) {
    current[static_cast<std::size_t>(cur_safety_[static_cast<std::size_t>(v)])] = 1;
    if (cur_video_[static_cast<std::size_t>(v)] >= 0)
      current[static_cast<std::size_t>(cur_video_[static_cast<std::size_t>(v)])] = 1;
  }
  for (const auto& [client, relay] : relay_plan_.relay_of) {
    auto it = flow_index_.find({relay, client, client, Role::Hop2});
    if (it != flow_index_.end()) current[static_cast<std::size_t>(it->second)] = 1;
  }
  for (auto& T : txs_) {
    std::erase_if(T.flows, [&](int fi) {
      Flow& f = flows_[static_cast<std::size_t>(fi)];
      const bool idle = !current[static_cast<std::size_t>(fi)] && !f.queue.has_live_packets() &&
                        f.pending_harq == 0;
      if (idle) f.listed = false;
      return idle;
    });
  }
  std::erase_if(safety_flows_, [&](int fi) {
    Flow& f = flows_[static_cast<std::size_t>(fi)];
    const bool idle = !current[static_cast<std::size_t>(fi)] && !f.queue.has_live_packets();
    if (idle) f.expiring = false;
    return idle;
  });
}

void Engine::forward_ready(std::int64_t t) {
  while (!forwards_.empty() && forwards_.front().ready <= t) {
    Forward fw = std::move(forwards_.front());
    forwards_.pop_front();
    const int fi = flow_for({fw.relay, fw.client, fw.client, Role::Hop2}, Band::V2V);
    flows_[static_cast<std::size_t>(fi)].queue.enqueue(fw.packet);
  }
}

void Engine::generate(std::int64_t t) {
  const std::int64_t period = safety_profile().period_ms;
  for (int v = 0; v < n_veh_; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    if (t % period == phase_[vi]) {
      const auto prof = safety_profile();
      Packet p;
      p.origin_id = t / period;
      p.bits = prof.packet_bits;
      p.arrival_ms = t;
      p.deadline_ms = t + prof.deadline_ms;
      const int tx = safety_tx_[vi];
      const bool self = tx == v;
      const bool local = tx == kNoTx || cfg_.locality_radius_m <= 0 ||
                         distance(pos(tx), pos(v), scenario_.highway_length) <= cfg_.locality_radius_m;
      if (t < window_end_ && !self && local) {
        p.tag = prr_group(tx, t);
        ++groups_[static_cast<std::size_t>(p.tag)].intended;
      }
      source_bits_ += p.bits;
      Flow& f = flows_[static_cast<std::size_t>(cur_safety_[vi])];
      const auto id = f.queue.enqueue(p);
      if (self) {
        p.id = id;
        handle(cur_safety_[vi], {f.queue.deliver_locally(p, t)});
      }
    }
    if (cur_video_[vi] >= 0) {
      const auto prof = video_profile();
      if (t % prof.period_ms == 0) {
        Packet p;
        p.origin_id = t;
        p.bits = prof.packet_bits;
        p.arrival_ms = t;
        source_bits_ += p.bits;
        flows_[static_cast<std::size_t>(cur_video_[vi])].queue.enqueue(p);
      }
    }
  }
}

void Engine::expire(std::int64_t t) {
  for (int fi : safety_flows_) {
    Flow& f = flows_[static_cast<std::size_t>(fi)];
    if (!f.queue.has_live_packets()) continue;
    auto out = f.queue.expire(t);
    if (!out.empty()) handle(fi, out);
  }
}

void Engine::schedule(int ti, std::int64_t t) {
  Transmitter& T = txs_[static_cast<std::size_t>(ti)];
  reserved_.assign(static_cast<std::size_t>(P_), 0);

  // HARQ retransmissions take their PRBs before any new data.
  std::vector<HarqJob> waiting;
  for (auto& job : T.harq) {
    if (job.due > t) {
      waiting.push_back(std::move(job));
      continue;
    }
    Flow& f = flows_[static_cast<std::size_t>(job.flow)];
    const bool live = std::any_of(job.segs.begin(), job.segs.end(),
                                  [&](const Segment& s) { return f.queue.is_live(s.packet_id); });
    if (!live) {
      --f.pending_harq;
      continue;
    }
    auto prbs = reserve_prbs(reserved_, job.n_prb);
    if (static_cast<int>(prbs.size()) < job.n_prb) {
      for (int p : prbs) reserved_[static_cast<std::size_t>(p)] = 0;
      job.due = t + 1;
      waiting.push_back(std::move(job));
      continue;
    }
    --f.pending_harq;
    ++stats_.retransmissions;
    tx_now_.push_back({ti, job.flow, job.first_tti, job.mcs, std::move(prbs), std::move(job.segs),
                       std::move(job.proc)});
  }
  T.harq = std::move(waiting);

  std::vector<SchedulableFlow> cand;
  std::vector<int> cand_flow, cand_mcs;
  for (int fi : T.flows) {
    const Flow& f = flows_[static_cast<std::size_t>(fi)];
    if (f.queue.backlog_bits() <= 0) continue;
    const auto& report = cqi(T.band, T.node, f.key.rx, t);
    const McsEntry& mcs = select_mcs(report, model_.mcs);
    cand.push_back({fi, f.queue.backlog_bits(), f.pf.avg_rate});
    cand_flow.push_back(fi);
    cand_mcs.push_back(mcs.index);
  }
  if (cand.empty()) return;
  rates_buf_.resize(cand.size() * static_cast<std::size_t>(P_));
  for (std::size_t c = 0; c < cand.size(); ++c) {
    // bits per PRB per TTI, as a rate in bits/s
    const double r = bits_per_prb(model_.mcs.at(cand_mcs[c]), cfg_.overhead) * 1000.0;
    std::fill_n(rates_buf_.begin() + static_cast<std::ptrdiff_t>(c * static_cast<std::size_t>(P_)), P_, r);
    cand[c].backlog_bits *= 1000;  // compared against rates in bits/s
  }
  const PrbAllocation alloc = schedule_tti(cand, rates_buf_, P_, reserved_, t);
  std::vector<std::vector<int>> prbs_of(cand.size());
  for (int p = 0; p < P_; ++p) {
    const int owner = alloc.owner[static_cast<std::size_t>(p)];
    if (owner >= 0) prbs_of[static_cast<std::size_t>(owner)].push_back(p);
  }
  for (std::size_t c = 0; c < cand.size(); ++c) {
    if (prbs_of[c].empty()) continue;
    Flow& f = flows_[static_cast<std::size_t>(cand_flow[c])];
    const auto& mcs = model_.mcs.at(cand_mcs[c]);
    const auto bits = tb_bits(mcs, static_cast<int>(prbs_of[c].size()), cfg_.overhead);
    auto segs = f.queue.pull(bits);
    if (segs.empty()) continue;
    for (const auto& s : segs) f.served_now += s.bits;
    ++stats_.transmissions;
    tx_now_.push_back({ti, cand_flow[c], t, cand_mcs[c], std::move(prbs_of[c]), std::move(segs), {}});
  }
}

void Engine::decode(std::int64_t t) {
  for (auto& tr : tx_now_) {
    const Transmitter& T = txs_[static_cast<std::size_t>(tr.tx)];
    for (int p : tr.prbs)
      act_now_[static_cast<std::size_t>(T.band)][static_cast<std::size_t>(p)].push_back(T.node);
  }
  for (auto& tr : tx_now_) {
    Transmitter& T = txs_[static_cast<std::size_t>(tr.tx)];
    Flow& f = flows_[static_cast<std::size_t>(tr.flow)];
    link_sinr(T.band, T.node, f.key.rx, t, act_now_, tr.prbs, sinr_buf_);
    if (trace_.sinr) {
      for (std::size_t k = 0; k < tr.prbs.size(); ++k)
        *trace_.sinr << t << ',' << T.node << ',' << f.key.rx << ','
                     << (T.band == Band::V2I ? "v2i" : "v2v") << ',' << tr.prbs[k] << ','
                     << linear_to_db(sinr_buf_[k]) << '\n';
    }
    auto proc = harq_combine(std::move(tr.proc), sinr_buf_, cfg_.harq_max_attempts);
    check_invariant(proc.has_value(), "transport block sent past its HARQ budget");
    const McsEntry& mcs = model_.mcs.at(tr.mcs);
    const double eff = miesm_effective_sinr(proc->accumulated_sinr, mcs.modulation_order, model_.mi);
    const double p_err = bler(linear_to_db(eff), mcs, model_.bler);
    RngStream draw = harq_rng_.substream(
        {static_cast<std::uint64_t>(T.node), static_cast<std::uint64_t>(f.key.rx),
         static_cast<std::uint64_t>(f.key.role), static_cast<std::uint64_t>(tr.first_tti),
         static_cast<std::uint64_t>(proc->attempt)});
    if (decode_attempt(draw, p_err) == DecodeResult::Ack) {
      handle(tr.flow, f.queue.ack(tr.segs, t + 1));
    } else if (proc->attempt >= cfg_.harq_max_attempts) {
      ++stats_.harq_drops;
      handle(tr.flow, f.queue.drop(tr.segs, t + 1));
    } else {
      ++f.pending_harq;
      T.harq.push_back({tr.flow, t + cfg_.harq_rtt_ms, tr.first_tti, tr.mcs,
                        static_cast<int>(tr.prbs.size()), std::move(tr.segs), std::move(*proc)});
    }
  }
}

void Engine::update_pf() {
  const double dt = cfg_.tti_ms / 1000.0;
  for (const auto& T : txs_) {
    for (int fi : T.flows) {
      Flow& f = flows_[static_cast<std::size_t>(fi)];
      f.pf = v2x::update_pf(f.pf, static_cast<double>(f.served_now), dt);
      f.served_now = 0;
    }
  }
}

RunResult Engine::run() {
  RngStream topo = root_.substream("topology").substream(scenario_label(cfg_.layout.band));
  scenario_ = generate_drop(cfg_.layout, topo);
  n_veh_ = static_cast<int>(scenario_.vehicles.size());
  const auto n = static_cast<std::size_t>(n_veh_);
  for (std::size_t i = 0; i < n; ++i)
    check_invariant(scenario_.vehicles[i].id == static_cast<int>(i), "vehicle ids must equal indices");
  assoc_.assign(n, -1);
  sinr_db_.assign(n, 0.0);
  safety_tx_.assign(n, kNoTx);
  cur_safety_.assign(n, -1);
  cur_video_.assign(n, -1);
  safety_bits_.assign(n, 0);
  safety_window_bits_.assign(n, 0);
  video_bits_.assign(n, 0);
  video_window_bits_.assign(n, 0);
  phase_.resize(n);
  const RngStream traffic = root_.substream("traffic");
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s = traffic.substream({static_cast<std::uint64_t>(i)});
    phase_[i] = static_cast<int>(s.uniform_int(0, safety_profile().period_ms - 1));
  }
  const std::size_t nodes = n + scenario_.rsus.size();
  tx_of_node_[0].assign(nodes, -1);
  tx_of_node_[1].assign(nodes, -1);
  for (std::size_t r = 0; r < scenario_.rsus.size(); ++r)
    transmitter_for(n_veh_ + static_cast<int>(r), Band::V2I);

  stats_.vehicles = n_veh_;
  for (const auto& v : scenario_.vehicles) stats_.video_vehicles += v.wants_video ? 1 : 0;

  if (trace_.sinr) *trace_.sinr << "tti,tx,rx,band,prb,sinr_db\n";
  if (trace_.plans) *trace_.plans << "time_ms,ap_id,f,ap_count,assigned\n";
  if (trace_.relays) *trace_.relays << "time_ms,client_id,relay_id\n";
  if (trace_.deliveries) *trace_.deliveries << "flow,role,tx,rx,packet,arrival_ms,done_ms,fate\n";
  if (trace_.association) *trace_.association << "time_ms,vehicle,x,rsu,sinr_db,video\n";

  const double dt = cfg_.tti_ms / 1000.0;
  for (std::int64_t t = 0; t < cfg_.duration_ms; t += cfg_.tti_ms) {
    now_ = t;
    if (t > 0) advance_in_place(scenario_, dt);
    if (t % cfg_.slicing.reslice_period_ms == 0) reslice(t);
    forward_ready(t);
    generate(t);
    expire(t);
    for (auto& band : act_now_)
      for (auto& l : band) l.clear();
    tx_now_.clear();
    cqi_cache_.clear();
    for (int ti = 0; ti < static_cast<int>(txs_.size()); ++ti) schedule(ti, t);
    decode(t);
    update_pf();
    std::swap(act_now_, act_prev_);
  }
  return finish();
}

RunResult Engine::finish() {
  RunResult res;
  std::int64_t source = 0, final_delivered = 0, hop1_delivered = 0, hop2_generated = 0;
  for (const auto& f : flows_) {
    check_invariant(f.queue.balanced(), "traffic ledger does not balance for a flow");
    const auto& l = f.queue.ledger();
    switch (f.key.role) {
      case Role::Safety:
      case Role::Video:
        source += l.generated_bits;
        final_delivered += l.delivered_bits;
        break;
      case Role::Hop1:
        source += l.generated_bits;
        hop1_delivered += l.delivered_bits;
        break;
      case Role::Hop2:
        hop2_generated += l.generated_bits;
        final_delivered += l.delivered_bits;
        break;
    }
  }
  std::int64_t forwarding = 0;
  for (const auto& fw : forwards_) forwarding += fw.packet.bits;
  check_invariant(source == source_bits_, "flow ledgers disagree with generated traffic");
  check_invariant(hop1_delivered == hop2_generated + forwarding, "relay forwarding lost bits");

  std::int64_t per_vehicle = 0;
  res.metrics.set_window_ms(window_end_);
  for (const auto& v : scenario_.vehicles) {
    const auto i = static_cast<std::size_t>(v.id);
    per_vehicle += safety_bits_[i] + video_bits_[i];
    res.metrics.add_vehicle(Slice::Safety, {v.id, safety_bits_[i], safety_window_bits_[i]});
    if (v.wants_video)
      res.metrics.add_vehicle(Slice::Video, {v.id, video_bits_[i], video_window_bits_[i]});
  }
  check_invariant(per_vehicle == final_delivered, "per-vehicle bits disagree with the scheduler ledger");

  std::int64_t packet_id = 0;
  for (const auto& g : groups_) {
    if (g.intended == 0) continue;
    check_invariant(g.finalized == g.intended, "safety packet inside the PRR window never finished");
    res.metrics.add_record({packet_id++, Slice::Safety, g.intended, g.successes});
  }
  res.metrics.advance_to(cfg_.duration_ms);

  stats_.generated_bits = source_bits_;
  stats_.delivered_bits = final_delivered;
  res.stats = stats_;
  return res;
}

}  // namespace

RunResult simulate(const SimConfig& cfg, const LinkModel& model, const TraceSinks& trace) {
  cfg.validate();
  Engine engine(cfg, model, trace);
  return engine.run();
}

}  // namespace v2x
