#pragma once

// Round-synchronous simulation engine. Each round runs the same phases:
//
//   1. scripted events (arrivals, relocations, drains), then mobility
//   2. adjacency recomputed from positions; broken head-member links counted
//   3. hello broadcasts on broadcast-interval rounds
//   4. everything on air is delivered to in-range nodes (Tx/Rx energy debits)
//   5. every alive node runs its transition, lowest id first
//   6. formation-complete check, invariant checks, metrics sample
//
// Messages queued in phase 5 of round k go on air in phase 4 of round k+1.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdwca/config.hpp"
#include "sdwca/geo_graph.hpp"
#include "sdwca/message.hpp"
#include "sdwca/mobility.hpp"
#include "sdwca/phy.hpp"
#include "sdwca/protocol.hpp"
#include "sdwca/reporting.hpp"
#include "sdwca/trace.hpp"

namespace sdwca {

/// Independent 64-bit seed for a (seed, a, b) triple.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Initial layout: explicit positions, or uniform draws. With a diameter cap
/// the layout is redrawn until the graph is connected and within the cap.
inline std::vector<Position> initial_layout(const ScenarioConfig& c) {
  if (!c.positions.empty()) return c.positions;
  if (!c.diameter_cap) return init_positions(c.n, c.terrain, c.seed);
  constexpr std::uint64_t kAttempts = 10000;
  for (std::uint64_t attempt = 0; attempt < kAttempts; ++attempt) {
    const auto seed = attempt == 0 ? c.seed : derive_seed(c.seed, attempt, 7);
    auto pos = init_positions(c.n, c.terrain, seed);
    std::map<NodeId, Position> m;
    for (NodeId i = 0; i < pos.size(); ++i) m[i] = pos[i];
    const auto rd = radius_diameter(TopologySnapshot(m, c.range));
    if (rd && rd->diameter <= *c.diameter_cap) return pos;
  }
  throw std::runtime_error("initial_layout: no layout within diameter_cap after " + std::to_string(kAttempts) +
                           " draws");
}

inline std::string describe(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::string {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Hello>) {
          std::string s = "seq=" + std::to_string(msg.seq);
          if (msg.weight) s += ";w=" + format_double(*msg.weight);
          if (msg.ch) s += ";ch=" + std::to_string(*msg.ch);
          return s;
        } else if constexpr (std::is_same_v<T, WeightInfo> || std::is_same_v<T, ClusterInfo> ||
                             std::is_same_v<T, ChAck>) {
          return "w=" + format_double(msg.weight);
        } else if constexpr (std::is_same_v<T, ClusterId>) {
          return "ch=" + std::to_string(msg.ch);
        } else {
          return {};
        }
      },
      m);
}

class World {
 public:
  struct OnAir {
    Message msg;
    std::string note;
    OverheadClass cls;
  };

  explicit World(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    total_ = cfg_.total_rounds();
    params_.range = cfg_.range;
    params_.weight = cfg_.weight_params;
    params_.hello_every = cfg_.hello_every();
    params_.warmup_rounds = 3 * params_.hello_every;
    const std::size_t population = cfg_.n + cfg_.node_arrivals.size();
    params_.scales.max_strong_degree = static_cast<double>(std::max<std::size_t>(population, 2) - 1);
    params_.scales.initial_energy = cfg_.initial_energy;
    mob_.terrain = cfg_.terrain;
    mob_.vmin = cfg_.vmin;
    mob_.vmax = cfg_.vmax;
    mob_.pause = cfg_.pause;
    noise_rng_.seed(derive_seed(cfg_.seed, 0, 2));

    const auto layout = initial_layout(cfg_);
    for (NodeId id = 0; id < layout.size(); ++id) add_node(id, layout[id], true, 0);
  }

  const ScenarioConfig& config() const { return cfg_; }
  const ProtocolParams& params() const { return params_; }
  Round round() const { return round_; }
  Round total_rounds() const { return total_; }
  bool finished() const { return round_ >= total_; }
  bool formation_complete() const { return formation_complete_; }

  const std::map<NodeId, NodeProtocolState>& states() const { return states_; }
  const NodeProtocolState& state(NodeId id) const { return states_.at(id); }
  Position position(NodeId id) const { return motion_.at(id).current; }
  const TopologySnapshot& snapshot() const { return snapshot_; }
  const EventTrace& trace() const { return trace_; }
  const OverheadLedger& ledger() const { return ledger_; }
  const std::vector<MetricsRow>& series() const { return series_; }
  std::uint64_t violation_count() const { return violation_count_; }
  const std::vector<std::string>& violation_samples() const { return violations_; }
  std::optional<Outcome> formation_outcome() const { return formation_outcome_; }

  void run() {
    while (!finished()) run_round();
  }

  void run_round() {
    if (finished()) throw std::logic_error("World::run_round: simulation already finished");
    const Round r = round_;
    role_changed_.clear();
    round_hello_ = round_formation_ = round_maintenance_ = 0;
    const auto roles_before = snapshot_roles();

    scripted_and_mobility(r);
    rebuild_topology(r);
    const bool hello_round = is_hello_round(r, params_.hello_every);
    std::vector<std::pair<NodeId, OnAir>> air;
    if (hello_round) hello_phase(r, air);
    auto inboxes = delivery_phase(r, air);
    const auto reaffiliations = transition_phase(r, hello_round, inboxes);

    for (const auto& [id, s] : states_) {
      auto it = roles_before.find(id);
      if (it == roles_before.end() || !(it->second == s.role)) role_changed_.insert(id);
    }
    completion_and_checks(r, hello_round);
    if (formation_complete_) {
      auto row = sample_metrics(r, states_, snapshot_);
      row.reaffiliations = reaffiliations;
      row.hello = round_hello_;
      row.formation = round_formation_;
      row.maintenance = round_maintenance_;
      series_.push_back(row);
    }
    ++round_;
  }

  MetricsReport report() const {
    MetricsReport rep;
    summarize(rep, series_, ledger_, cfg_, states_.size());
    rep.outcome = formation_outcome_.value_or(Outcome::Incomplete);
    rep.invariant_violations = violation_count_;
    rep.violation_samples = violations_;
    return rep;
  }

  AuditReport audit() const { return audit_overhead(ledger_, cfg_, trace_); }

 private:
  void add_node(NodeId id, Position pos, bool initial, Round joined) {
    NodeProtocolState s;
    s.id = id;
    s.initial = initial;
    s.joined_round = joined;
    s.energy = EnergyBook(cfg_.initial_energy, cfg_.phy.tx_cost, cfg_.phy.rx_cost, cfg_.threshold_joules());
    if (auto it = cfg_.weight_overrides.find(id); it != cfg_.weight_overrides.end()) s.weight_override = it->second;
    states_.emplace(id, std::move(s));
    motion_.emplace(id, initial_waypoint(pos, mob_));
    rngs_.emplace(id, Rng(derive_seed(cfg_.seed, id, 1)));
    last_residual_[id] = cfg_.initial_energy;
  }

  std::map<NodeId, Role> snapshot_roles() const {
    std::map<NodeId, Role> out;
    for (const auto& [id, s] : states_) out[id] = s.role;
    return out;
  }

  std::size_t orphans_of(NodeId head) const {
    std::size_t n = 0;
    for (const auto& [id, s] : states_) {
      n += id != head && s.alive() && s.role.is_member() && s.role.ch == head && !s.searching();
    }
    return n;
  }

  void kill(NodeId id, Round r, int phase, const char* cause) {
    auto& s = states_.at(id);
    if (!s.alive()) return;
    const bool was_head = s.role.is_head();
    s.role = Role{RoleKind::Dead, 0};
    s.members.clear();
    s.pending = Pending::None;
    role_changed_.insert(id);
    trace_.append(r, id, "death", "phase=" + std::to_string(phase) + ";cause=" + cause);
    if (was_head && formation_complete_) ledger_.orphaned += orphans_of(id);
  }

  void scripted_and_mobility(Round r) {
    for (std::size_t i = 0; i < cfg_.node_arrivals.size(); ++i) {
      const auto& a = cfg_.node_arrivals[i];
      if (a.round != r) continue;
      const NodeId id = static_cast<NodeId>(cfg_.n + i);
      add_node(id, a.pos, false, r);
      ++ledger_.arrivals;
      trace_.append(r, id, "arrival", "x=" + format_double(a.pos.x) + ";y=" + format_double(a.pos.y));
    }
    if (r > 0) {
      for (auto& [id, m] : motion_) {
        if (states_.at(id).alive()) m = advance(m, cfg_.seconds_per_round, mob_, rngs_.at(id));
      }
    }
    for (const auto& rel : cfg_.relocations) {
      if (rel.round != r || !states_.count(rel.node)) continue;
      auto& m = motion_.at(rel.node);
      m.current = m.target = rel.pos;
      m.speed = 0.0;
      m.pause_left = cfg_.pause;
      trace_.append(r, rel.node, "relocate", "x=" + format_double(rel.pos.x) + ";y=" + format_double(rel.pos.y));
    }
    for (const auto& d : cfg_.energy_drains) {
      if (d.round != r || !states_.count(d.node)) continue;
      auto& s = states_.at(d.node);
      if (!s.alive()) continue;
      s.energy.drain(d.joules);
      trace_.append(r, d.node, "drain", "j=" + format_double(d.joules));
      if (s.energy.dead()) kill(d.node, r, 1, "drain");
    }
  }

  void rebuild_topology(Round r) {
    std::map<NodeId, Position> alive;
    for (const auto& [id, s] : states_) {
      if (s.alive()) alive[id] = motion_.at(id).current;
    }
    snapshot_ = TopologySnapshot(alive, cfg_.range);
    ledger_.max_degree = std::max(ledger_.max_degree, snapshot_.max_degree());
    if (!formation_complete_) return;

    // Ground truth for link failures between a settled member and its head.
    for (auto it = broken_.begin(); it != broken_.end();) {
      const auto& s = states_.at(it->first);
      if (!s.alive() || !s.role.is_member() || s.role.ch != it->second || s.searching()) {
        it = broken_.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& [id, s] : states_) {
      if (!s.alive() || !s.role.is_member() || s.searching() || s.role.ch == id) continue;
      const NodeId c = s.role.ch;
      auto ch = states_.find(c);
      if (ch == states_.end() || !ch->second.alive() || !ch->second.role.is_head()) continue;
      if (snapshot_.adjacent(id, c) || broken_.count({id, c})) continue;
      broken_.insert({id, c});
      ++ledger_.link_failures;
      trace_.append(r, id, "link_failure", "ch=" + std::to_string(c));
    }
  }

  void hello_phase(Round r, std::vector<std::pair<NodeId, OnAir>>& air) {
    for (auto& [id, s] : states_) {
      if (!s.alive()) continue;
      auto msg = emit_hello(s, r, motion_.at(id).current, params_.hello_every);
      if (!msg) continue;
      if (!s.energy.debit(Direction::Tx)) {
        kill(id, r, 3, "tx");
        continue;
      }
      air.push_back({id, OnAir{*msg, {}, OverheadClass::Hello}});
    }
  }

  double sample_rss(double distance) {
    double rss = received_strength(cfg_.phy.model, distance);
    if (cfg_.phy.noise_sigma_db > 0.0) {
      std::normal_distribution<double> noise(0.0, cfg_.phy.noise_sigma_db);
      rss *= std::pow(10.0, noise(noise_rng_) / 10.0);
    }
    return rss;
  }

  std::map<NodeId, std::vector<Received>> delivery_phase(Round r, std::vector<std::pair<NodeId, OnAir>>& air) {
    std::map<NodeId, std::vector<Received>> inboxes;
    const std::size_t hellos = air.size();
    for (auto& c : carried_) air.push_back(std::move(c));
    carried_.clear();
    for (std::size_t i = 0; i < air.size(); ++i) {
      const NodeId sender = air[i].first;
      const OnAir& m = air[i].second;
      // Hellos were transmitted (and paid for) in phase 3; they are on air
      // even if the sender has since died from reception costs.
      if (i >= hellos) {
        auto& ss = states_.at(sender);
        if (!ss.alive()) continue;
        if (!ss.energy.debit(Direction::Tx)) {
          kill(sender, r, 4, "tx");
          continue;
        }
      }
      ledger_.count(m.cls, kind_of(m.msg));
      switch (m.cls) {
        case OverheadClass::Hello: ++round_hello_; break;
        case OverheadClass::Formation: ++round_formation_; break;
        case OverheadClass::Maintenance: ++round_maintenance_; break;
      }
      std::string detail = std::string("class=") + to_string(m.cls);
      if (auto d = describe(m.msg); !d.empty()) detail += ";" + d;
      if (!m.note.empty()) detail += ";note=" + m.note;
      trace_.append(r, sender, to_string(kind_of(m.msg)), std::move(detail));
      for (NodeId v : snapshot_.neighbors(sender)) {
        auto& sv = states_.at(v);
        if (!sv.alive()) continue;
        if (!sv.energy.debit(Direction::Rx)) {
          kill(v, r, 4, "rx");
          continue;
        }
        inboxes[v].push_back(Received{m.msg, sample_rss(snapshot_.distance(sender, v))});
      }
    }
    return inboxes;
  }

  OverheadClass classify(const NodeProtocolState& sender, const Message& msg) const {
    switch (kind_of(msg)) {
      case MessageKind::Hello: return OverheadClass::Hello;
      case MessageKind::WeightInfo:
      case MessageKind::ClusterInfo:
      case MessageKind::ClusterId:
        return !formation_complete_ && sender.initial ? OverheadClass::Formation : OverheadClass::Maintenance;
      default: return OverheadClass::Maintenance;
    }
  }

  std::uint64_t transition_phase(Round r, bool hello_round, std::map<NodeId, std::vector<Received>>& inboxes) {
    static const std::vector<Received> kEmpty;
    if (!formation_complete_ && r == params_.warmup_rounds) {
      for (const auto& [id, s] : states_) ledger_.weight_senders += s.alive() && s.initial;
    }
    std::uint64_t reaffiliations = 0;
    std::vector<NodeId> resigned;
    for (auto& [id, s] : states_) {
      if (!s.alive()) continue;
      RoundContext ctx{r, hello_round, motion_.at(id).current, formation_complete_};
      auto it = inboxes.find(id);
      auto out = step(s, it == inboxes.end() ? kEmpty : it->second, ctx, params_);
      for (auto& o : out.outbox) carried_.push_back({id, OnAir{o.msg, o.note, classify(s, o.msg)}});
      for (const auto& e : out.events) {
        std::string detail;
        if (e.other != e.node) detail = "other=" + std::to_string(e.other);
        if (e.kind == EventKind::WeightComputed) detail = "w=" + format_double(weight_of(s));
        trace_.append(r, e.node, to_string(e.kind), detail);
        if (e.kind == EventKind::Reaffiliated && formation_complete_) ++reaffiliations;
        if (e.kind == EventKind::Interchange) ++ledger_.interchanges;
        if (e.kind == EventKind::Resigned) resigned.push_back(e.node);
        // A node can pass through a role and back within one round; its
        // neighbours still hear about it a round later.
        if (e.kind != EventKind::WeightComputed && e.kind != EventKind::LinkLost) role_changed_.insert(e.node);
      }
    }
    // Resigned heads still list their members until the resignation is heard.
    for (NodeId h : resigned) ledger_.orphaned += orphans_of(h);
    return reaffiliations;
  }

  void violation(Round r, NodeId id, const std::string& what) {
    ++violation_count_;
    if (violations_.size() < 20) violations_.push_back("round " + std::to_string(r) + " node " + std::to_string(id) + ": " + what);
  }

  void completion_and_checks(Round r, bool hello_round) {
    for (const auto& [id, s] : states_) {
      const double res = s.energy.residual();
      if (res > last_residual_[id] + 1e-12) violation(r, id, "residual energy increased");
      last_residual_[id] = res;
    }

    if (!formation_complete_ && r == params_.warmup_rounds + 1) {
      std::vector<NodeId> heads;
      for (const auto& [id, s] : states_) {
        if (s.alive() && s.initial_head) heads.push_back(id);
      }
      for (std::size_t i = 0; i < heads.size(); ++i) {
        for (std::size_t j = i + 1; j < heads.size(); ++j) {
          if (snapshot_.adjacent(heads[i], heads[j])) violation(r, heads[i], "adjacent initial heads");
        }
      }
    }

    if (!formation_complete_ && r > params_.warmup_rounds) {
      bool done = true;
      for (const auto& [id, s] : states_) {
        if (s.initial && s.alive() && !s.role.settled()) done = false;
      }
      if (done) {
        formation_complete_ = true;
        ledger_.formation_round = r;
        for (const auto& [id, s] : states_) {
          if (!s.initial || !s.alive()) continue;
          ledger_.formation_heads += s.role.is_head();
          ledger_.formation_members += s.role.is_member();
          ledger_.initial_heads += s.initial_head;
          ledger_.critical_nodes += s.was_critical;
        }
        formation_outcome_ = classify_outcome(states_);
        trace_.append(r, 0, "formation_complete",
                      "heads=" + std::to_string(ledger_.formation_heads) +
                          ";members=" + std::to_string(ledger_.formation_members) +
                          ";critical=" + std::to_string(ledger_.critical_nodes));
      }
    }

    if (formation_complete_ && hello_round) check_structure(r);
  }

  // Structural invariants over settled nodes. Role changes propagate with a
  // one-round lag, so a member whose own role or whose head's role changed
  // this round is judged next round.
  void check_structure(Round r) {
    for (const auto& [id, s] : states_) {
      if (!s.alive()) continue;
      if (s.initial && (s.role.kind == RoleKind::Unknown || s.role.kind == RoleKind::Critical)) {
        violation(r, id, "unsettled after formation");
        continue;
      }
      if (!s.role.is_member() || s.searching() || s.pending != Pending::None) continue;
      const NodeId c = s.role.ch;
      if (role_changed_.count(c) || role_changed_.count(id)) continue;
      const auto& hs = states_.at(c);
      if (!hs.alive() || !hs.role.is_head()) {
        violation(r, id, "head " + std::to_string(c) + " is not a head");
      } else if (!snapshot_.adjacent(id, c)) {
        violation(r, id, "not adjacent to head " + std::to_string(c));
      }
      const auto& nb = snapshot_.neighbors(id);
      if (std::none_of(nb.begin(), nb.end(), [&](NodeId v) { return states_.at(v).alive() && states_.at(v).role.is_head(); })) {
        violation(r, id, "undominated member");
      }
    }
  }

  ScenarioConfig cfg_;
  ProtocolParams params_;
  MobilityParams mob_;
  Round total_ = 0;
  Round round_ = 0;
  bool formation_complete_ = false;
  std::optional<Outcome> formation_outcome_;

  std::map<NodeId, NodeProtocolState> states_;
  std::map<NodeId, WaypointState> motion_;
  std::map<NodeId, Rng> rngs_;
  std::map<NodeId, double> last_residual_;
  Rng noise_rng_;
  TopologySnapshot snapshot_{{}, 1.0};
  std::vector<std::pair<NodeId, OnAir>> carried_;
  std::set<std::pair<NodeId, NodeId>> broken_;
  std::set<NodeId> role_changed_;

  EventTrace trace_;
  OverheadLedger ledger_;
  std::vector<MetricsRow> series_;
  std::uint64_t round_hello_ = 0;
  std::uint64_t round_formation_ = 0;
  std::uint64_t round_maintenance_ = 0;
  std::uint64_t violation_count_ = 0;
  std::vector<std::string> violations_;
};

inline World run_scenario(const ScenarioConfig& cfg) {
  World w(cfg);
  w.run();
  return w;
}

}  // namespace sdwca
