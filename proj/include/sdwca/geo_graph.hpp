#pragma once

// Geometric (unit disk) network graph built from node positions, plus the
// neighbour-quality bands and the small graph toolkit used by the protocol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdwca {

using NodeId = std::uint32_t;

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double euclidean(Position a, Position b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class NeighborClass { Strong, Medium, Weak, OutOfRange };

inline const char* to_string(NeighborClass c) {
  switch (c) {
    case NeighborClass::Strong: return "strong";
    case NeighborClass::Medium: return "medium";
    case NeighborClass::Weak: return "weak";
    case NeighborClass::OutOfRange: return "out_of_range";
  }
  return "?";
}

// Bands are closed on the right: ed = r/2 is Strong, ed = 3r/4 is Medium,
// ed = r is Weak.
inline NeighborClass classify_neighbor(double ed, double range) {
  if (!(ed >= 0.0)) throw std::invalid_argument("classify_neighbor: distance must be >= 0");
  if (!(range > 0.0)) throw std::invalid_argument("classify_neighbor: range must be > 0");
  if (ed <= range / 2.0) return NeighborClass::Strong;
  if (ed <= 3.0 * range / 4.0) return NeighborClass::Medium;
  if (ed <= range) return NeighborClass::Weak;
  return NeighborClass::OutOfRange;
}

/// The network graph G_t at one instant: positions plus a uniform range.
/// Adjacency is computed once at construction; the snapshot is immutable.
class TopologySnapshot {
 public:
  TopologySnapshot() = default;

  TopologySnapshot(const std::map<NodeId, Position>& positions, double range) : range_(range) {
    if (!(range > 0.0)) throw std::invalid_argument("TopologySnapshot: range must be > 0");
    ids_.reserve(positions.size());
    pos_.reserve(positions.size());
    for (const auto& [id, p] : positions) {
      ids_.push_back(id);
      pos_.push_back(p);
    }
    adj_.assign(ids_.size(), {});
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (std::size_t j = i + 1; j < ids_.size(); ++j) {
        if (euclidean(pos_[i], pos_[j]) <= range_) {
          adj_[i].push_back(ids_[j]);
          adj_[j].push_back(ids_[i]);
        }
      }
    }
    for (auto& list : adj_) std::sort(list.begin(), list.end());
  }

  double range() const { return range_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<NodeId>& nodes() const { return ids_; }

  bool contains(NodeId id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
  }

  Position position(NodeId id) const { return pos_[index_of(id)]; }

  /// Sorted ascending.
  const std::vector<NodeId>& neighbors(NodeId id) const { return adj_[index_of(id)]; }

  bool adjacent(NodeId a, NodeId b) const {
    const auto& list = neighbors(a);
    return contains(b) && std::binary_search(list.begin(), list.end(), b);
  }

  double distance(NodeId a, NodeId b) const { return euclidean(position(a), position(b)); }

  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& list : adj_) twice += list.size();
    return twice / 2;
  }

  std::size_t max_degree() const {
    std::size_t best = 0;
    for (const auto& list : adj_) best = std::max(best, list.size());
    return best;
  }

 private:
  std::size_t index_of(NodeId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) {
      throw std::out_of_range("TopologySnapshot: unknown node id " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - ids_.begin());
  }

  double range_ = 1.0;
  std::vector<NodeId> ids_;
  std::vector<Position> pos_;
  std::vector<std::vector<NodeId>> adj_;
};

struct NeighborPartition {
  std::set<NodeId> strong;
  std::set<NodeId> medium;
  std::set<NodeId> weak;
};

inline NeighborPartition neighbor_partition(const TopologySnapshot& g, NodeId u) {
  NeighborPartition out;
  for (NodeId v : g.neighbors(u)) {
    switch (classify_neighbor(g.distance(u, v), g.range())) {
      case NeighborClass::Strong: out.strong.insert(v); break;
      case NeighborClass::Medium: out.medium.insert(v); break;
      case NeighborClass::Weak: out.weak.insert(v); break;
      case NeighborClass::OutOfRange: break;
    }
  }
  return out;
}

struct DegreeVector {
  std::size_t strong = 0;
  std::size_t medium = 0;
  std::size_t weak = 0;
  std::size_t total = 0;

  friend bool operator==(const DegreeVector&, const DegreeVector&) = default;
};

inline DegreeVector degree_vector(const TopologySnapshot& g, NodeId u) {
  const auto p = neighbor_partition(g, u);
  DegreeVector d{p.strong.size(), p.medium.size(), p.weak.size(), 0};
  d.total = d.strong + d.medium + d.weak;
  return d;
}

namespace detail {

inline std::map<NodeId, std::size_t> bfs_hops(const TopologySnapshot& g, NodeId source) {
  std::map<NodeId, std::size_t> dist;
  dist[source] = 0;
  std::deque<NodeId> queue{source};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : g.neighbors(u)) {
      if (dist.emplace(v, dist[u] + 1).second) queue.push_back(v);
    }
  }
  return dist;
}

}  // namespace detail

/// Least number of hops between u and v; nullopt when unreachable.
inline std::optional<std::size_t> hop_distance(const TopologySnapshot& g, NodeId u, NodeId v) {
  if (!g.contains(u) || !g.contains(v)) throw std::out_of_range("hop_distance: unknown node id");
  const auto dist = detail::bfs_hops(g, u);
  auto it = dist.find(v);
  if (it == dist.end()) return std::nullopt;
  return it->second;
}

/// Max hop distance from u to any node; nullopt if some node is unreachable.
inline std::optional<std::size_t> eccentricity(const TopologySnapshot& g, NodeId u) {
  if (!g.contains(u)) throw std::out_of_range("eccentricity: unknown node id");
  const auto dist = detail::bfs_hops(g, u);
  if (dist.size() != g.size()) return std::nullopt;
  std::size_t ecc = 0;
  for (const auto& [_, d] : dist) ecc = std::max(ecc, d);
  return ecc;
}

struct RadiusDiameter {
  std::size_t radius = 0;
  std::size_t diameter = 0;
};

/// nullopt for an empty or disconnected graph.
inline std::optional<RadiusDiameter> radius_diameter(const TopologySnapshot& g) {
  if (g.size() == 0) return std::nullopt;
  RadiusDiameter rd{static_cast<std::size_t>(-1), 0};
  for (NodeId u : g.nodes()) {
    auto ecc = eccentricity(g, u);
    if (!ecc) return std::nullopt;
    rd.radius = std::min(rd.radius, *ecc);
    rd.diameter = std::max(rd.diameter, *ecc);
  }
  return rd;
}

inline bool is_dominating_set(const TopologySnapshot& g, const std::set<NodeId>& s) {
  for (NodeId u : g.nodes()) {
    if (s.count(u)) continue;
    const auto& nb = g.neighbors(u);
    bool covered = std::any_of(nb.begin(), nb.end(), [&](NodeId v) { return s.count(v) > 0; });
    if (!covered) return false;
  }
  return true;
}

}  // namespace sdwca
