#pragma once

// Overhead ledger, cluster ranking, per-round metrics, CSV emission and the
// message-count audit.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdwca/config.hpp"
#include "sdwca/geo_graph.hpp"
#include "sdwca/message.hpp"
#include "sdwca/protocol.hpp"
#include "sdwca/trace.hpp"

namespace sdwca {

enum class OverheadClass { Hello, Formation, Maintenance };

inline const char* to_string(OverheadClass c) {
  switch (c) {
    case OverheadClass::Hello: return "hello";
    case OverheadClass::Formation: return "formation";
    case OverheadClass::Maintenance: return "maintenance";
  }
  return "?";
}

struct OverheadLedger {
  std::array<std::uint64_t, kMessageKinds> formation_by_kind{};
  std::array<std::uint64_t, kMessageKinds> maintenance_by_kind{};
  std::uint64_t hello = 0;

  // maintenance events
  std::uint64_t orphaned = 0;        // members left headless by a resignation or a dead head
  std::uint64_t arrivals = 0;        // new nodes
  std::uint64_t link_failures = 0;   // head-member links that broke
  std::uint64_t interchanges = 0;    // head role handovers

  // formation structure, captured when formation completes
  std::uint64_t initial_heads = 0;
  std::uint64_t critical_nodes = 0;
  std::uint64_t formation_heads = 0;
  std::uint64_t formation_members = 0;
  std::uint64_t weight_senders = 0;
  std::size_t max_degree = 0;
  std::optional<Round> formation_round;

  void count(OverheadClass c, MessageKind k) {
    switch (c) {
      case OverheadClass::Hello: ++hello; break;
      case OverheadClass::Formation: ++formation_by_kind[static_cast<std::size_t>(k)]; break;
      case OverheadClass::Maintenance: ++maintenance_by_kind[static_cast<std::size_t>(k)]; break;
    }
  }

  std::uint64_t formation() const {
    std::uint64_t s = 0;
    for (auto v : formation_by_kind) s += v;
    return s;
  }
  std::uint64_t maintenance() const {
    std::uint64_t s = 0;
    for (auto v : maintenance_by_kind) s += v;
    return s;
  }
  std::uint64_t total() const { return hello + formation() + maintenance(); }
  std::uint64_t formation_of(MessageKind k) const { return formation_by_kind[static_cast<std::size_t>(k)]; }
  std::uint64_t maintenance_of(MessageKind k) const { return maintenance_by_kind[static_cast<std::size_t>(k)]; }
};

// ---------------------------------------------------------------------------
// Ranking

enum class ClusterRank { Strong, Medium, Weak, Intermediate };
inline constexpr std::size_t kClusterRanks = 4;

inline const char* to_string(ClusterRank r) {
  switch (r) {
    case ClusterRank::Strong: return "strong";
    case ClusterRank::Medium: return "medium";
    case ClusterRank::Weak: return "weak";
    case ClusterRank::Intermediate: return "intermediate";
  }
  return "?";
}

/// Strong/medium/weak when every member sits in that band of the head,
/// intermediate otherwise. A head without members is strong. A member out of
/// range of its head is a structural fault and throws.
inline ClusterRank rank_cluster(NodeId ch, const std::vector<NodeId>& members, const TopologySnapshot& g) {
  if (members.empty()) return ClusterRank::Strong;
  std::set<NeighborClass> seen;
  for (NodeId m : members) {
    const auto cls = classify_neighbor(g.distance(ch, m), g.range());
    if (cls == NeighborClass::OutOfRange) {
      throw std::logic_error("rank_cluster: member " + std::to_string(m) + " out of range of head " + std::to_string(ch));
    }
    seen.insert(cls);
  }
  if (seen.size() > 1) return ClusterRank::Intermediate;
  switch (*seen.begin()) {
    case NeighborClass::Strong: return ClusterRank::Strong;
    case NeighborClass::Medium: return ClusterRank::Medium;
    default: return ClusterRank::Weak;
  }
}

/// Ground-truth clusters: alive heads and their alive, non-searching members.
inline std::map<NodeId, std::vector<NodeId>> cluster_map(const std::map<NodeId, NodeProtocolState>& states) {
  std::map<NodeId, std::vector<NodeId>> out;
  for (const auto& [id, s] : states) {
    if (s.alive() && s.role.is_head()) out[id];
  }
  for (const auto& [id, s] : states) {
    if (!s.alive() || !s.role.is_member() || s.searching()) continue;
    auto it = out.find(s.role.ch);
    if (it != out.end()) it->second.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricsRow {
  Round round = 0;
  std::size_t clusters = 0;
  std::uint64_t reaffiliations = 0;  // during this round
  std::array<std::size_t, kClusterRanks> ranks{};
  std::uint64_t hello = 0;  // packets on air this round, by class
  std::uint64_t formation = 0;
  std::uint64_t maintenance = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Clusters and rank histogram for one round. Members whose head link broke
/// this round are skipped; they are already looking for a new head.
inline MetricsRow sample_metrics(Round round, const std::map<NodeId, NodeProtocolState>& states,
                                 const TopologySnapshot& g) {
  MetricsRow row;
  row.round = round;
  for (const auto& [ch, members] : cluster_map(states)) {
    ++row.clusters;
    std::vector<NodeId> linked;
    for (NodeId m : members) {
      if (g.contains(m) && g.contains(ch) && g.adjacent(ch, m)) linked.push_back(m);
    }
    if (!g.contains(ch)) continue;
    ++row.ranks[static_cast<std::size_t>(rank_cluster(ch, linked, g))];
  }
  return row;
}

struct MetricsReport {
  std::size_t n = 0;
  double range = 0.0;
  double vmax = 0.0;
  std::uint64_t seed = 0;
  double sim_seconds = 0.0;
  std::optional<Round> formation_round;
  Outcome outcome = Outcome::Incomplete;

  double avg_clusters = 0.0;
  std::uint64_t reaffiliations = 0;
  double reaffiliation_rate = 0.0;  // per the configured normalisation
  double reaffiliation_rate_global = 0.0;
  double reaffiliation_rate_per_node = 0.0;
  std::array<double, kClusterRanks> avg_ranks{};  // mean clusters per rank per sampled round

  std::uint64_t hello = 0;
  std::uint64_t formation = 0;
  std::uint64_t maintenance = 0;
  std::uint64_t maintenance_first_100s = 0;  // maintenance packets in the first 100 s after formation

  std::uint64_t invariant_violations = 0;
  std::vector<std::string> violation_samples;
};

inline void summarize(MetricsReport& rep, const std::vector<MetricsRow>& series, const OverheadLedger& ledger,
                      const ScenarioConfig& cfg, std::size_t population) {
  rep.n = cfg.n;
  rep.range = cfg.range;
  rep.vmax = cfg.vmax;
  rep.seed = cfg.seed;
  rep.sim_seconds = static_cast<double>(cfg.total_rounds()) * cfg.seconds_per_round;
  rep.formation_round = ledger.formation_round;
  rep.hello = ledger.hello;
  rep.formation = ledger.formation();
  rep.maintenance = ledger.maintenance();
  double clusters = 0.0;
  std::array<double, kClusterRanks> ranks{};
  rep.reaffiliations = 0;
  rep.maintenance_first_100s = 0;
  for (const auto& row : series) {
    clusters += static_cast<double>(row.clusters);
    for (std::size_t i = 0; i < kClusterRanks; ++i) ranks[i] += static_cast<double>(row.ranks[i]);
    rep.reaffiliations += row.reaffiliations;
    if (ledger.formation_round &&
        static_cast<double>(row.round - *ledger.formation_round) * cfg.seconds_per_round <= 100.0 &&
        row.round > *ledger.formation_round) {
      rep.maintenance_first_100s += row.maintenance;
    }
  }
  const double samples = static_cast<double>(series.size());
  rep.avg_clusters = series.empty() ? 0.0 : clusters / samples;
  for (std::size_t i = 0; i < kClusterRanks; ++i) rep.avg_ranks[i] = series.empty() ? 0.0 : ranks[i] / samples;
  const double secs = rep.sim_seconds;
  rep.reaffiliation_rate_global = static_cast<double>(rep.reaffiliations) / secs;
  rep.reaffiliation_rate_per_node = rep.reaffiliation_rate_global / static_cast<double>(std::max<std::size_t>(population, 1));
  rep.reaffiliation_rate = cfg.reaffiliation_rate == RateNormalization::PerNode ? rep.reaffiliation_rate_per_node
                                                                               : rep.reaffiliation_rate_global;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kSeriesHeader =
    "round,clusters,reaffiliations,strong,medium,weak,intermediate,hello,formation,maintenance";
inline constexpr const char* kSummaryHeader =
    "n,range,vmax,seed,avg_clusters,reaffiliations,reaffiliation_rate,strong,medium,weak,intermediate,hello,"
    "formation,maintenance,outcome,formation_round";

inline void write_series_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kSeriesHeader << '\n';
  for (const auto& r : rows) {
    out << r.round << ',' << r.clusters << ',' << r.reaffiliations;
    for (auto v : r.ranks) out << ',' << v;
    out << ',' << r.hello << ',' << r.formation << ',' << r.maintenance << '\n';
  }
}

inline void write_summary_row(std::ostream& out, const MetricsReport& r) {
  out << r.n << ',' << format_double(r.range) << ',' << format_double(r.vmax) << ',' << r.seed << ','
      << format_double(r.avg_clusters) << ',' << r.reaffiliations << ',' << format_double(r.reaffiliation_rate);
  for (double v : r.avg_ranks) out << ',' << format_double(v);
  out << ',' << r.hello << ',' << r.formation << ',' << r.maintenance << ',' << to_string(r.outcome) << ','
      << (r.formation_round ? std::to_string(*r.formation_round) : std::string()) << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<MetricsReport>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) write_summary_row(out, r);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::vector<std::vector<std::string>> read_csv_body(std::istream& in, const char* header, std::size_t width) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::runtime_error("csv: unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != width) throw std::runtime_error("csv: wrong column count in '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

inline std::vector<MetricsRow> read_series_csv(std::istream& in) {
  std::vector<MetricsRow> out;
  for (const auto& c : detail::read_csv_body(in, kSeriesHeader, 10)) {
    MetricsRow r;
    r.round = std::stoull(c[0]);
    r.clusters = std::stoull(c[1]);
    r.reaffiliations = std::stoull(c[2]);
    for (std::size_t i = 0; i < kClusterRanks; ++i) r.ranks[i] = std::stoull(c[3 + i]);
    r.hello = std::stoull(c[7]);
    r.formation = std::stoull(c[8]);
    r.maintenance = std::stoull(c[9]);
    out.push_back(r);
  }
  return out;
}

/// Parses a summary CSV. Only the columns the CSV carries are filled in.
inline std::vector<MetricsReport> read_summary_csv(std::istream& in) {
  std::vector<MetricsReport> out;
  for (const auto& c : detail::read_csv_body(in, kSummaryHeader, 16)) {
    MetricsReport r;
    r.n = std::stoull(c[0]);
    r.range = parse_double(c[1]);
    r.vmax = parse_double(c[2]);
    r.seed = std::stoull(c[3]);
    r.avg_clusters = parse_double(c[4]);
    r.reaffiliations = std::stoull(c[5]);
    r.reaffiliation_rate = parse_double(c[6]);
    for (std::size_t i = 0; i < kClusterRanks; ++i) r.avg_ranks[i] = parse_double(c[7 + i]);
    r.hello = std::stoull(c[11]);
    r.formation = std::stoull(c[12]);
    r.maintenance = std::stoull(c[13]);
    if (c[14] == "perfect") {
      r.outcome = Outcome::Perfect;
    } else if (c[14] == "fairly_perfect") {
      r.outcome = Outcome::FairlyPerfect;
    } else {
      r.outcome = Outcome::Incomplete;
    }
    if (!c[15].empty()) r.formation_round = std::stoull(c[15]);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Audit

struct AuditLine {
  std::string name;
  std::uint64_t expected = 0;
  std::uint64_t actual = 0;
  bool ok() const { return expected == actual; }
};

struct AuditReport {
  std::vector<AuditLine> lines;
  bool passed() const {
    for (const auto& l : lines) {
      if (!l.ok()) return false;
    }
    return true;
  }
  void write(std::ostream& out) const {
    for (const auto& l : lines) {
      out << (l.ok() ? "ok   " : "FAIL ") << l.name << " expected=" << l.expected << " actual=" << l.actual << '\n';
    }
  }
};

/// Hello broadcasts a node made, rebuilt from its lifetime in the trace: a
/// node hellos on every broadcast-interval round from its arrival until it
/// dies. A death before the hello phase of a round (scripted drain, or the
/// hello transmission itself failing) suppresses that round's hello.
inline std::uint64_t expected_hellos(const ScenarioConfig& cfg, const EventTrace& trace) {
  const Round total = cfg.total_rounds();
  const Round every = cfg.hello_every();
  std::map<NodeId, Round> start;
  std::map<NodeId, Round> stop;  // exclusive
  for (NodeId i = 0; i < cfg.n; ++i) start[i] = 0;
  for (const auto& r : trace.records()) {
    if (r.event == "arrival") start[r.node] = r.round;
    if (r.event == "death") {
      const int phase = std::stoi(detail_value(r.detail, "phase"));
      stop[r.node] = phase <= 3 ? r.round : r.round + 1;
    }
  }
  std::uint64_t n = 0;
  for (const auto& [id, s] : start) {
    const Round e = stop.count(id) ? stop.at(id) : total;
    for (Round k = s; k < e; ++k) n += is_hello_round(k, every);
  }
  return n;
}

inline AuditReport audit_overhead(const OverheadLedger& ledger, const ScenarioConfig& cfg, const EventTrace& trace) {
  AuditReport rep;
  rep.lines.push_back({"hello", expected_hellos(cfg, trace), ledger.hello});
  rep.lines.push_back({"weight_info", ledger.weight_senders, ledger.formation_of(MessageKind::WeightInfo)});
  rep.lines.push_back({"cluster_info", ledger.formation_heads, ledger.formation_of(MessageKind::ClusterInfo)});
  rep.lines.push_back({"cluster_id", ledger.formation_members, ledger.formation_of(MessageKind::ClusterId)});
  rep.lines.push_back({"find_ch", ledger.orphaned + ledger.arrivals + 2 * ledger.link_failures + 2 * ledger.interchanges,
                       ledger.maintenance_of(MessageKind::FindCh)});

  // Every message the ledger counted must appear in the trace, class and all.
  std::array<std::uint64_t, kMessageKinds> traced_formation{};
  std::array<std::uint64_t, kMessageKinds> traced_maintenance{};
  std::uint64_t traced_hello = 0;
  for (const auto& r : trace.records()) {
    const auto kind = message_kind_from_string(r.event);
    if (!kind) continue;
    const auto cls = detail_value(r.detail, "class");
    if (cls == "hello") {
      ++traced_hello;
    } else if (cls == "formation") {
      ++traced_formation[static_cast<std::size_t>(*kind)];
    } else if (cls == "maintenance") {
      ++traced_maintenance[static_cast<std::size_t>(*kind)];
    }
  }
  rep.lines.push_back({"trace.hello", ledger.hello, traced_hello});
  for (std::size_t i = 0; i < kMessageKinds; ++i) {
    const auto k = static_cast<MessageKind>(i);
    if (k == MessageKind::Hello) continue;
    rep.lines.push_back({std::string("trace.formation.") + to_string(k), ledger.formation_by_kind[i], traced_formation[i]});
    rep.lines.push_back(
        {std::string("trace.maintenance.") + to_string(k), ledger.maintenance_by_kind[i], traced_maintenance[i]});
  }
  return rep;
}

}  // namespace sdwca
