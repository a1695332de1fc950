#pragma once

// Random waypoint mobility: move toward a waypoint at a constant speed, pause
// on arrival, then draw a new waypoint and speed.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "sdwca/geo_graph.hpp"

namespace sdwca {

struct Terrain {
  double width = 750.0;
  double height = 750.0;

  bool contains(Position p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
};

struct MobilityParams {
  Terrain terrain;
  double vmin = 0.1;   // m/s
  double vmax = 10.0;  // m/s
  double pause = 30.0; // s
};

struct WaypointState {
  Position current;
  Position target;
  double speed = 0.0;
  double pause_left = 0.0;
};

using Rng = std::mt19937_64;

inline Position random_position(const Terrain& terrain, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, terrain.width);
  std::uniform_real_distribution<double> uy(0.0, terrain.height);
  Position p;
  p.x = ux(rng);
  p.y = uy(rng);
  return p;
}

inline std::vector<Position> init_positions(std::size_t n, const Terrain& terrain, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("init_positions: n must be >= 1");
  if (!(terrain.width > 0.0) || !(terrain.height > 0.0)) {
    throw std::invalid_argument("init_positions: terrain must be positive");
  }
  Rng rng(seed);
  std::vector<Position> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_position(terrain, rng));
  return out;
}

/// A node starts parked at its initial position for one full pause period,
/// the way ns-2 setdest scenarios begin.
inline WaypointState initial_waypoint(Position start, const MobilityParams& params) {
  return WaypointState{start, start, 0.0, params.pause};
}

inline WaypointState advance(WaypointState s, double dt, const MobilityParams& params, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("advance: dt must be > 0");
  if (params.vmax <= 0.0) {
    s.pause_left = std::max(0.0, s.pause_left - dt);
    return s;
  }
  double left = dt;
  // Bounded: each pass either finishes dt or reaches a waypoint/pause end.
  for (int guard = 0; left > 0.0 && guard < 64; ++guard) {
    if (s.pause_left > 0.0) {
      const double used = std::min(s.pause_left, left);
      s.pause_left -= used;
      left -= used;
      continue;
    }
    const double remaining = euclidean(s.current, s.target);
    if (remaining == 0.0 || s.speed <= 0.0) {
      s.target = random_position(params.terrain, rng);
      const double lo = std::min(params.vmin, params.vmax);
      std::uniform_real_distribution<double> us(lo, params.vmax);
      s.speed = us(rng);
      if (s.speed <= 0.0) s.speed = params.vmax;
      continue;
    }
    const double reach = s.speed * left;
    if (reach < remaining) {
      const double f = reach / remaining;
      s.current.x += (s.target.x - s.current.x) * f;
      s.current.y += (s.target.y - s.current.y) * f;
      left = 0.0;
    } else {
      s.current = s.target;
      left -= remaining / s.speed;
      s.pause_left = params.pause;
      if (params.pause <= 0.0) s.speed = 0.0;
    }
  }
  s.current.x = std::clamp(s.current.x, 0.0, params.terrain.width);
  s.current.y = std::clamp(s.current.y, 0.0, params.terrain.height);
  return s;
}

}  // namespace sdwca
