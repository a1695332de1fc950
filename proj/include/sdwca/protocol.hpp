#pragma once

// Per-node clustering state machine.
//
// Each node is a transition function (state, inbox) -> (state, outbox) run
// once per round. Messages put in the outbox during round k are on air in
// round k+1. Initial formation follows a fixed synchronous schedule counted
// from the end of the hello warm-up:
//
//   weigh     compute weight, broadcast WEIGHT_INFO
//   weigh+1   local maxima declare themselves heads (CLUSTER_INFO)
//   weigh+2   UNKNOWN nodes join the heaviest head heard (Cluster_id)
//   weigh+3   nodes still UNKNOWN turn Critical and start the adjustment
//
// Adjustment runs over the critical subgraph: a critical node becomes a head
// once every heavier critical neighbour is known to be a member, and joins the
// heaviest adjacent adjustment head once no undecided neighbour could beat it.
// That reproduces "heaviest remaining node takes its critical neighbours"
// without any node needing more than 1-hop knowledge.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdwca/geo_graph.hpp"
#include "sdwca/message.hpp"
#include "sdwca/phy.hpp"
#include "sdwca/weighting.hpp"

namespace sdwca {

enum class RoleKind { Unknown, ClusterHead, ClusterMember, Critical, Dead };

inline const char* to_string(RoleKind k) {
  switch (k) {
    case RoleKind::Unknown: return "unknown";
    case RoleKind::ClusterHead: return "head";
    case RoleKind::ClusterMember: return "member";
    case RoleKind::Critical: return "critical";
    case RoleKind::Dead: return "dead";
  }
  return "?";
}

struct Role {
  RoleKind kind = RoleKind::Unknown;
  NodeId ch = 0;  // meaningful for heads (self) and members

  static Role head(NodeId self) { return {RoleKind::ClusterHead, self}; }
  static Role member(NodeId ch) { return {RoleKind::ClusterMember, ch}; }

  bool is_head() const { return kind == RoleKind::ClusterHead; }
  bool is_member() const { return kind == RoleKind::ClusterMember; }
  bool settled() const { return is_head() || is_member(); }

  friend bool operator==(const Role&, const Role&) = default;
};

struct NeighborRecord {
  NodeId id = 0;
  Position last_position;
  double last_rss = 0.0;
  std::optional<double> prev_rss;
  std::uint64_t last_seq = 0;
  Round last_seen = 0;
  NeighborClass cls = NeighborClass::OutOfRange;
  std::optional<double> advertised_weight;
  std::optional<NodeId> advertised_ch;  // == id when the neighbour announced itself head
  std::optional<NodeId> hello_ch;       // head named in the latest hello
  bool pair_valid = false;              // last two hellos carried consecutive seqs
};

enum class Pending {
  None,
  AwaitAcks,   // sent find_CH, acknowledgements due two rounds later
  ResignWait,  // resigned head overhearing the acks its old members collect
  AwaitPromotion,  // followed a hand-over to a node not yet heard as head
};

enum class FindReason { Resignation, Arrival, LinkLoss, HeadLinkLoss, Handoff };

inline const char* to_string(FindReason r) {
  switch (r) {
    case FindReason::Resignation: return "resignation";
    case FindReason::Arrival: return "arrival";
    case FindReason::LinkLoss: return "link_loss";
    case FindReason::HeadLinkLoss: return "head_link_loss";
    case FindReason::Handoff: return "handoff";
  }
  return "?";
}

struct ProtocolParams {
  double range = 150.0;
  WeightParams weight;
  WeightScales scales;
  Round hello_every = 1;    // broadcast interval in rounds
  Round warmup_rounds = 3;  // rounds of hellos before the weight is computed
};

struct NodeProtocolState {
  NodeId id = 0;
  Role role;
  std::map<NodeId, NeighborRecord> neighbors;
  std::optional<double> weight;
  std::optional<double> weight_override;  // scripted experiments pin W directly
  EnergyBook energy;
  std::set<NodeId> members;  // heads only

  std::uint64_t hello_seq = 0;
  Round latest_hello_round = 0;
  bool heard_any_hello = false;
  std::set<NodeId> last_heard;  // hello senders of the previous hello round

  bool initial = true;  // present for initial formation
  Round joined_round = 0;

  // formation bookkeeping
  std::set<NodeId> weight_peers;
  std::set<NodeId> critical_peers;
  bool initial_head = false;
  bool adjusted = false;
  bool was_critical = false;

  // maintenance bookkeeping
  Pending pending = Pending::None;
  Round pending_round = 0;
  FindReason pending_reason = FindReason::LinkLoss;
  bool resigned = false;

  bool alive() const { return role.kind != RoleKind::Dead; }
  bool searching() const { return pending == Pending::AwaitAcks && !role.is_head(); }
  bool current_neighbor(NodeId v) const {
    auto it = neighbors.find(v);
    return heard_any_hello && it != neighbors.end() && it->second.last_seen == latest_hello_round;
  }
};

struct Received {
  Message msg;
  double rss = 0.0;
};

struct Outgoing {
  Message msg;
  std::string note;  // free-form trace detail
};

enum class EventKind {
  WeightComputed,
  InitialHead,
  Joined,        // first affiliation (formation or arrival)
  Reaffiliated,  // existing member moved to another head
  Critical,
  AdjustedHead,
  AdjustedMember,
  Resigned,
  Interchange,   // head handed its role to a heavier new neighbour
  Promoted,      // took over the head role from a neighbour
  SelfHead,      // find_CH went unanswered
  Merged,        // memberless head joined a heavier head
  LinkLost,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::WeightComputed: return "weight";
    case EventKind::InitialHead: return "initial_head";
    case EventKind::Joined: return "joined";
    case EventKind::Reaffiliated: return "reaffiliated";
    case EventKind::Critical: return "critical";
    case EventKind::AdjustedHead: return "adjusted_head";
    case EventKind::AdjustedMember: return "adjusted_member";
    case EventKind::Resigned: return "resigned";
    case EventKind::Interchange: return "interchange";
    case EventKind::Promoted: return "promoted";
    case EventKind::SelfHead: return "self_head";
    case EventKind::Merged: return "merged";
    case EventKind::LinkLost: return "link_lost";
  }
  return "?";
}

struct ProtocolEvent {
  EventKind kind;
  NodeId node;
  NodeId other = 0;
};

struct StepOutput {
  std::vector<Outgoing> outbox;
  std::vector<ProtocolEvent> events;
};

struct RoundContext {
  Round round = 0;
  bool hello_round = true;
  Position self_pos;
  bool formation_complete = false;
};

inline double weight_of(const NodeProtocolState& s) { return s.weight.value_or(0.0); }

// ---------------------------------------------------------------------------
// Hello exchange

inline bool is_hello_round(Round round, Round hello_every) { return hello_every > 0 && round % hello_every == 0; }

inline std::optional<Message> emit_hello(NodeProtocolState& s, Round round, Position self_pos, Round hello_every) {
  if (!s.alive() || !is_hello_round(round, hello_every)) return std::nullopt;
  ++s.hello_seq;
  std::optional<NodeId> ch;
  if (s.role.settled()) ch = s.role.ch;
  return Hello{s.id, self_pos, s.hello_seq, s.weight, ch};
}

/// A neighbour that skipped a sequence number loses its ratio until two
/// consecutive hellos arrive again.
inline void ingest_hello(NodeProtocolState& s, const Hello& h, double rss, Round round, Position self_pos,
                         double range) {
  auto [it, fresh] = s.neighbors.try_emplace(h.id);
  NeighborRecord& rec = it->second;
  rec.id = h.id;
  if (!fresh && rec.last_seq > 0 && h.seq == rec.last_seq + 1) {
    rec.prev_rss = rec.last_rss;
    rec.pair_valid = true;
  } else {
    rec.prev_rss.reset();
    rec.pair_valid = false;
  }
  rec.last_rss = rss;
  rec.last_seq = h.seq;
  rec.last_seen = round;
  rec.last_position = h.pos;
  rec.cls = classify_neighbor(euclidean(self_pos, h.pos), range);
  if (h.weight) rec.advertised_weight = h.weight;
  rec.hello_ch = h.ch;
}

// ---------------------------------------------------------------------------
// Weight

inline std::vector<NodeId> current_neighbors(const NodeProtocolState& s) {
  std::vector<NodeId> out;
  for (const auto& [id, rec] : s.neighbors) {
    if (s.current_neighbor(id)) out.push_back(id);
  }
  return out;
}

inline MobilitySampleSet mobility_samples(const NodeProtocolState& s) {
  MobilitySampleSet samples;
  for (NodeId v : current_neighbors(s)) {
    const auto& rec = s.neighbors.at(v);
    ++samples.degree;
    if (!rec.pair_valid || !rec.prev_rss) continue;
    auto ratio = relative_mobility(RssSamplePair{*rec.prev_rss, rec.last_rss, true});
    if (ratio) samples.ratios.emplace_back(v, *ratio);
  }
  return samples;
}

inline std::size_t strong_degree(const NodeProtocolState& s) {
  std::size_t d = 0;
  for (NodeId v : current_neighbors(s)) d += s.neighbors.at(v).cls == NeighborClass::Strong;
  return d;
}

inline double compute_weight(const NodeProtocolState& s, const ProtocolParams& p) {
  if (s.weight_override) return *s.weight_override;
  const auto m = mobility_metric(mobility_samples(s), p.weight.denominator);
  return node_weight(strong_degree(s), m, s.energy.residual(), p.weight, p.scales);
}

inline Message compute_and_broadcast_weight(NodeProtocolState& s, const ProtocolParams& p) {
  s.weight = compute_weight(s, p);
  return WeightInfo{s.id, *s.weight};
}

// ---------------------------------------------------------------------------
// Formation

inline bool outranks_peer(const NodeProtocolState& s, NodeId self, double self_w, NodeId other) {
  auto it = s.neighbors.find(other);
  const double w = (it != s.neighbors.end() && it->second.advertised_weight) ? *it->second.advertised_weight : 0.0;
  return outranks(self_w, self, w, other);
}

/// Declares a head iff this node outranks every neighbour whose weight it
/// received. Returns the CLUSTER_INFO to broadcast.
inline std::optional<Message> elect(NodeProtocolState& s) {
  if (s.role.kind != RoleKind::Unknown) return std::nullopt;
  const double w = weight_of(s);
  for (NodeId v : s.weight_peers) {
    if (!outranks_peer(s, s.id, w, v)) return std::nullopt;
  }
  s.role = Role::head(s.id);
  s.initial_head = true;
  return ClusterInfo{s.id, w};
}

enum class AffiliationChange { None, Joined, Reaffiliated };

/// UNKNOWN nodes join the sender; members switch when the sender outranks
/// their current head.
inline AffiliationChange handle_cluster_info(NodeProtocolState& s, const ClusterInfo& msg) {
  auto& rec = s.neighbors[msg.id];
  rec.id = msg.id;
  rec.advertised_weight = msg.weight;
  rec.advertised_ch = msg.id;
  if (s.role.kind == RoleKind::Unknown) {
    s.role = Role::member(msg.id);
    return AffiliationChange::Joined;
  }
  if (s.role.is_member() && s.role.ch != msg.id) {
    const auto cur = s.neighbors.find(s.role.ch);
    const double cur_w = (cur != s.neighbors.end() && cur->second.advertised_weight) ? *cur->second.advertised_weight : 0.0;
    if (outranks(msg.weight, msg.id, cur_w, s.role.ch)) {
      s.role.ch = msg.id;
      return AffiliationChange::Reaffiliated;
    }
  }
  return AffiliationChange::None;
}

/// A peer that has left our range no longer blocks the adjustment.
inline bool peer_decided(const NodeProtocolState& s, NodeId peer) {
  auto it = s.neighbors.find(peer);
  if (it == s.neighbors.end()) return true;
  return it->second.advertised_ch.has_value() || !s.current_neighbor(peer);
}

inline bool peer_is_head(const NodeProtocolState& s, NodeId peer) {
  auto it = s.neighbors.find(peer);
  return it != s.neighbors.end() && it->second.advertised_ch == peer;
}

inline double peer_weight(const NodeProtocolState& s, NodeId peer) {
  auto it = s.neighbors.find(peer);
  return (it != s.neighbors.end() && it->second.advertised_weight) ? *it->second.advertised_weight : 0.0;
}

/// One local adjustment decision for a critical node.
inline std::optional<Outgoing> adjustment_step(NodeProtocolState& s, StepOutput& out) {
  if (s.role.kind != RoleKind::Critical) return std::nullopt;
  std::optional<NodeId> best;
  for (NodeId p : s.critical_peers) {
    if (peer_is_head(s, p) && (!best || outranks(peer_weight(s, p), p, peer_weight(s, *best), *best))) best = p;
  }
  const double my_w = weight_of(s);
  if (best) {
    const double best_w = peer_weight(s, *best);
    for (NodeId p : s.critical_peers) {
      if (!peer_decided(s, p) && outranks(peer_weight(s, p), p, best_w, *best)) return std::nullopt;
    }
    s.role = Role::member(*best);
    s.adjusted = true;
    out.events.push_back({EventKind::AdjustedMember, s.id, *best});
    return Outgoing{ClusterId{s.id, *best}, "adjusted"};
  }
  for (NodeId p : s.critical_peers) {
    if (!peer_decided(s, p) && outranks(peer_weight(s, p), p, my_w, s.id)) return std::nullopt;
  }
  s.role = Role::head(s.id);
  s.adjusted = true;
  out.events.push_back({EventKind::AdjustedHead, s.id, s.id});
  return Outgoing{ClusterInfo{s.id, my_w}, "adjusted"};
}

inline void record_cluster_id(NodeProtocolState& s, const ClusterId& msg) {
  auto& rec = s.neighbors[msg.id];
  rec.id = msg.id;
  rec.advertised_ch = msg.ch;
  if (s.role.is_head()) {
    if (msg.ch == s.id) {
      s.members.insert(msg.id);
    } else {
      s.members.erase(msg.id);
    }
  }
}

inline void formation_step(NodeProtocolState& s, const std::vector<Received>& inbox, const RoundContext& ctx,
                           const ProtocolParams& p, StepOutput& out) {
  const Round weigh = p.warmup_rounds;
  if (ctx.round < weigh) return;
  if (ctx.round == weigh) {
    out.outbox.push_back({compute_and_broadcast_weight(s, p), ""});
    out.events.push_back({EventKind::WeightComputed, s.id});
    return;
  }
  std::vector<ClusterInfo> infos;
  for (const auto& r : inbox) {
    if (const auto* wi = std::get_if<WeightInfo>(&r.msg)) {
      auto& rec = s.neighbors[wi->id];
      rec.id = wi->id;
      rec.advertised_weight = wi->weight;
      if (ctx.round == weigh + 1) s.weight_peers.insert(wi->id);
    } else if (const auto* ci = std::get_if<ClusterInfo>(&r.msg)) {
      infos.push_back(*ci);
    } else if (const auto* cid = std::get_if<ClusterId>(&r.msg)) {
      record_cluster_id(s, *cid);
    }
  }

  if (ctx.round == weigh + 1) {
    if (auto msg = elect(s)) {
      out.outbox.push_back({*msg, "initial"});
      out.events.push_back({EventKind::InitialHead, s.id, s.id});
    }
    return;
  }

  if (ctx.round == weigh + 2) {
    bool changed = false;
    for (const auto& ci : infos) changed |= handle_cluster_info(s, ci) != AffiliationChange::None;
    if (changed) {
      out.outbox.push_back({ClusterId{s.id, s.role.ch}, "joined"});
      out.events.push_back({EventKind::Joined, s.id, s.role.ch});
    }
    return;
  }

  // Adjustment-phase CLUSTER_INFO only updates tables; members stay put.
  for (const auto& ci : infos) {
    auto& rec = s.neighbors[ci.id];
    rec.id = ci.id;
    rec.advertised_weight = ci.weight;
    rec.advertised_ch = ci.id;
    if (s.role.is_head()) s.members.erase(ci.id);
  }

  if (ctx.round == weigh + 3 && s.role.kind == RoleKind::Unknown) {
    s.role.kind = RoleKind::Critical;
    s.was_critical = true;
    for (NodeId v : s.weight_peers) {
      if (!peer_decided(s, v)) s.critical_peers.insert(v);
    }
    out.events.push_back({EventKind::Critical, s.id});
  }
  if (auto msg = adjustment_step(s, out)) out.outbox.push_back(*msg);
}

// ---------------------------------------------------------------------------
// Maintenance

inline std::optional<NodeId> best_ack(const std::vector<ChAck>& acks) {
  std::optional<ChAck> best;
  for (const auto& a : acks) {
    if (!best || outranks(a.weight, a.ch, best->weight, best->ch)) best = a;
  }
  if (!best) return std::nullopt;
  return best->ch;
}

inline void send_find(NodeProtocolState& s, FindReason reason, Round round, StepOutput& out) {
  s.pending = Pending::AwaitAcks;
  s.pending_round = round;
  s.pending_reason = reason;
  out.outbox.push_back({FindCh{s.id}, to_string(reason)});
}

inline void become_member(NodeProtocolState& s, NodeId ch, StepOutput& out, const char* note) {
  s.role = Role::member(ch);
  s.members.clear();
  s.pending = Pending::None;
  out.outbox.push_back({ClusterId{s.id, ch}, note});
}

/// True when v's hello of this round names v as a head.
inline bool heads_by_hello(const NodeProtocolState& s, NodeId v, Round round) {
  const auto it = s.neighbors.find(v);
  return it != s.neighbors.end() && it->second.last_seen == round && it->second.hello_ch == v;
}

/// Case iv: a head meeting a heavier new neighbour that shares at least two
/// neighbours with it hands over its role.
inline std::optional<NodeId> interchange_candidate(const NodeProtocolState& s, const std::set<NodeId>& heard,
                                                   double range) {
  std::optional<NodeId> best;
  const double my_w = weight_of(s);
  for (NodeId v : heard) {
    if (s.last_heard.count(v) || s.members.count(v)) continue;
    const auto& rec = s.neighbors.at(v);
    if (!rec.advertised_weight || !outranks(*rec.advertised_weight, v, my_w, s.id)) continue;
    std::size_t common = 0;
    for (NodeId w : heard) {
      if (w == v) continue;
      if (euclidean(s.neighbors.at(w).last_position, rec.last_position) <= range) ++common;
    }
    if (common < 2) continue;
    if (!best || outranks(*rec.advertised_weight, v, peer_weight(s, *best), *best)) best = v;
  }
  return best;
}

inline void maintenance_tick(NodeProtocolState& s, const std::vector<Received>& inbox,
                             const std::set<NodeId>& heard, const RoundContext& ctx, const ProtocolParams& p,
                             StepOutput& out) {
  std::vector<ChAck> acks;
  std::vector<ClusterId> ids;
  std::set<NodeId> resigned_heads;
  bool find_seen = false;

  for (const auto& r : inbox) {
    if (const auto* wi = std::get_if<WeightInfo>(&r.msg)) {
      s.neighbors[wi->id].advertised_weight = wi->weight;
    } else if (const auto* ci = std::get_if<ClusterInfo>(&r.msg)) {
      auto& rec = s.neighbors[ci->id];
      rec.id = ci->id;
      rec.advertised_weight = ci->weight;
      rec.advertised_ch = ci->id;
      if (s.role.is_head()) s.members.erase(ci->id);
    } else if (const auto* cid = std::get_if<ClusterId>(&r.msg)) {
      ids.push_back(*cid);
    } else if (std::holds_alternative<FindCh>(r.msg)) {
      find_seen = true;
    } else if (const auto* ack = std::get_if<ChAck>(&r.msg)) {
      auto& rec = s.neighbors[ack->ch];
      rec.id = ack->ch;
      rec.advertised_weight = ack->weight;
      rec.advertised_ch = ack->ch;
      acks.push_back(*ack);
    } else if (const auto* res = std::get_if<ChResign>(&r.msg)) {
      resigned_heads.insert(res->ch);
      auto it = s.neighbors.find(res->ch);
      if (it != s.neighbors.end()) it->second.advertised_ch.reset();
    }
  }

  // (i) resignation
  if (s.role.is_head() && !s.resigned && s.energy.below_threshold()) {
    s.resigned = true;
    s.members.clear();
    s.pending = Pending::ResignWait;
    s.pending_round = ctx.round;
    out.outbox.push_back({ChResign{s.id}, ""});
    out.events.push_back({EventKind::Resigned, s.id});
  }

  // outstanding find_CH
  if (s.pending == Pending::AwaitAcks && ctx.round >= s.pending_round + 2) {
    const auto best = best_ack(acks);
    const bool was_member = s.role.is_member();
    const NodeId old_ch = s.role.ch;
    if (s.role.is_head()) {
      s.pending = Pending::None;
      if (s.members.empty() && best && outranks(peer_weight(s, *best), *best, weight_of(s), s.id)) {
        become_member(s, *best, out, "merged");
        out.events.push_back({EventKind::Merged, s.id, *best});
      }
    } else if (best) {
      become_member(s, *best, out, "rejoined");
      if (was_member && old_ch != *best) {
        out.events.push_back({EventKind::Reaffiliated, s.id, *best});
      } else if (!was_member) {
        out.events.push_back({EventKind::Joined, s.id, *best});
      }
    } else {
      s.role = Role::head(s.id);
      s.members.clear();
      s.pending = Pending::None;
      out.events.push_back({EventKind::SelfHead, s.id, s.id});
    }
  } else if (s.pending == Pending::ResignWait && ctx.round >= s.pending_round + 3) {
    s.pending = Pending::None;
    if (const auto best = best_ack(acks); best && *best != s.id && s.role.is_head()) {
      become_member(s, *best, out, "resigned");
      out.events.push_back({EventKind::Joined, s.id, *best});
    }
  }

  // Cluster_id announcements: member tables, hand-overs and promotions.
  for (const auto& msg : ids) {
    auto& rec = s.neighbors[msg.id];
    rec.id = msg.id;
    const bool from_head = rec.advertised_ch == msg.id;
    rec.advertised_ch = msg.ch;
    if (s.role.is_head()) {
      if (msg.ch == s.id) {
        s.members.insert(msg.id);
        // A head handing over to us: its members around us come along.
        if (from_head) {
          for (const auto& [v, nrec] : s.neighbors) {
            if (v != s.id && nrec.advertised_ch == msg.id && s.current_neighbor(v)) s.members.insert(v);
          }
        }
      } else {
        s.members.erase(msg.id);
      }
      continue;
    }
    if (msg.ch == s.id) {
      s.role = Role::head(s.id);
      s.pending = Pending::None;
      s.members = {msg.id};
      // Members of the old head that were already around us come along.
      for (const auto& [v, nrec] : s.neighbors) {
        if (nrec.advertised_ch == msg.id && s.current_neighbor(v)) s.members.insert(v);
      }
      out.outbox.push_back({ClusterInfo{s.id, weight_of(s)}, "promoted"});
      out.events.push_back({EventKind::Promoted, s.id, msg.id});
      continue;
    }
    if (s.role.is_member() && !s.searching() && msg.id == s.role.ch) {
      if (s.current_neighbor(msg.ch)) {
        s.role.ch = msg.ch;
        out.events.push_back({EventKind::Reaffiliated, s.id, msg.ch});
        if (!(ctx.hello_round && heads_by_hello(s, msg.ch, ctx.round))) {
          s.pending = Pending::AwaitPromotion;
          s.pending_round = ctx.round;
        }
      } else {
        send_find(s, FindReason::Handoff, ctx.round, out);
      }
    }
  }

  if (s.role.is_member() && !s.searching() && resigned_heads.count(s.role.ch)) {
    send_find(s, FindReason::Resignation, ctx.round, out);
  }

  // (iii) / (iv): link failures and establishments, seen through hellos.
  if (ctx.hello_round) {
    if (s.role.is_member() && !s.searching() && !heard.count(s.role.ch)) {
      out.events.push_back({EventKind::LinkLost, s.id, s.role.ch});
      send_find(s, FindReason::LinkLoss, ctx.round, out);
    } else if (s.role.is_head()) {
      std::vector<NodeId> lost;
      for (NodeId m : s.members) {
        if (!heard.count(m)) lost.push_back(m);
      }
      if (!lost.empty()) {
        for (NodeId m : lost) s.members.erase(m);
        out.events.push_back({EventKind::LinkLost, s.id, lost.front()});
        if (!s.resigned) send_find(s, FindReason::HeadLinkLoss, ctx.round, out);
      }
      if (!s.resigned) {
        if (auto v = interchange_candidate(s, heard, p.range)) {
          become_member(s, *v, out, "interchange");
          out.events.push_back({EventKind::Interchange, s.id, *v});
          // v hears the hand-over next round and can only say so after that.
          s.pending = Pending::AwaitPromotion;
          s.pending_round = ctx.round + 1;
        }
      }
    }
  }

  // The head a member follows must say it is one in its own hellos. A
  // hand-over target that never took the role (the hand-over was lost) or a
  // head that has since given it up sends the member looking.
  if (ctx.hello_round && s.role.is_member() && heard.count(s.role.ch) && ctx.round > s.pending_round &&
      (s.pending == Pending::None || s.pending == Pending::AwaitPromotion)) {
    if (heads_by_hello(s, s.role.ch, ctx.round)) {
      if (s.pending == Pending::AwaitPromotion) s.pending = Pending::None;
    } else {
      send_find(s, FindReason::Handoff, ctx.round, out);
    }
  }

  // (ii) arrival: after the warm-up, look for a head.
  if (!s.initial && s.role.kind == RoleKind::Unknown && s.pending == Pending::None &&
      ctx.round >= s.joined_round + p.warmup_rounds) {
    s.weight = compute_weight(s, p);
    out.events.push_back({EventKind::WeightComputed, s.id});
    send_find(s, FindReason::Arrival, ctx.round, out);
  }

  if (find_seen && s.role.is_head() && !s.resigned) {
    out.outbox.push_back({ChAck{s.id, weight_of(s)}, ""});
  }
}

/// One full round for one node.
inline StepOutput step(NodeProtocolState& s, const std::vector<Received>& inbox, const RoundContext& ctx,
                       const ProtocolParams& p) {
  StepOutput out;
  if (!s.alive()) return out;
  std::set<NodeId> heard;
  for (const auto& r : inbox) {
    if (const auto* h = std::get_if<Hello>(&r.msg)) {
      ingest_hello(s, *h, r.rss, ctx.round, ctx.self_pos, p.range);
      heard.insert(h->id);
    }
  }
  if (ctx.hello_round) {
    s.latest_hello_round = ctx.round;
    s.heard_any_hello = true;
  }
  if (s.initial && !ctx.formation_complete) {
    formation_step(s, inbox, ctx, p, out);
  } else if (ctx.formation_complete) {
    maintenance_tick(s, inbox, heard, ctx, p, out);
  }
  if (ctx.hello_round) s.last_heard = heard;
  return out;
}

// ---------------------------------------------------------------------------
// Whole-network views

inline std::set<NodeId> collect_critical(const std::map<NodeId, NodeProtocolState>& states) {
  std::set<NodeId> out;
  for (const auto& [id, s] : states) {
    if (s.role.kind == RoleKind::Unknown || s.role.kind == RoleKind::Critical) out.insert(id);
  }
  return out;
}

/// Centralised form of the adjustment: repeatedly the heaviest remaining
/// critical node becomes a head and takes its undecided critical neighbours.
inline void adjust_clusters(const std::set<NodeId>& critical, std::map<NodeId, NodeProtocolState>& states,
                            const TopologySnapshot& g) {
  std::vector<NodeId> order(critical.begin(), critical.end());
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return outranks(weight_of(states.at(a)), a, weight_of(states.at(b)), b);
  });
  std::set<NodeId> decided;
  for (NodeId u : order) {
    if (decided.count(u)) continue;
    auto& su = states.at(u);
    su.role = Role::head(u);
    su.adjusted = true;
    decided.insert(u);
    for (NodeId v : g.neighbors(u)) {
      if (!critical.count(v) || decided.count(v)) continue;
      states.at(v).role = Role::member(u);
      states.at(v).adjusted = true;
      su.members.insert(v);
      decided.insert(v);
    }
  }
}

enum class Outcome { Perfect, FairlyPerfect, Incomplete };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Perfect: return "perfect";
    case Outcome::FairlyPerfect: return "fairly_perfect";
    case Outcome::Incomplete: return "incomplete";
  }
  return "?";
}

/// Perfect when no node needed the adjustment, fairly perfect when the
/// adjustment resolved every critical node.
inline Outcome classify_outcome(const std::map<NodeId, NodeProtocolState>& states) {
  bool any_critical = false;
  for (const auto& [_, s] : states) {
    if (!s.initial || !s.alive()) continue;
    if (!s.role.settled()) return Outcome::Incomplete;
    any_critical |= s.was_critical;
  }
  return any_critical ? Outcome::FairlyPerfect : Outcome::Perfect;
}

}  // namespace sdwca
