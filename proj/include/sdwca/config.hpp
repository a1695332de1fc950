#pragma once

// Scenario configuration: defaults mirror the base simulation setup
// (50 nodes, 750 x 750 m, 10 m/s, 30 s pause, 100 J, 500 s).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdwca/geo_graph.hpp"
#include "sdwca/message.hpp"
#include "sdwca/mobility.hpp"
#include "sdwca/phy.hpp"
#include "sdwca/weighting.hpp"

namespace sdwca {

struct NodeArrival {
  Round round = 0;
  Position pos;
};

/// Scripted teleport of an existing node, used to stage link events.
struct Relocation {
  Round round = 0;
  NodeId node = 0;
  Position pos;
};

/// Scripted battery drain, used to stage a head resignation.
struct EnergyDrain {
  Round round = 0;
  NodeId node = 0;
  double joules = 0.0;
};

struct PhyConfig {
  PhyModel model;
  double noise_sigma_db = 0.0;  // 0 disables log-normal shadowing noise
  double tx_cost = 0.02;        // J per broadcast
  double rx_cost = 0.01;        // J per reception
  double threshold_fraction = 0.2;
};

/// Normalisation of the re-affiliation count.
enum class RateNormalization { PerNode, Global };

struct ScenarioConfig {
  std::size_t n = 50;
  Terrain terrain{750.0, 750.0};
  double vmax = 10.0;
  double vmin = 0.1;
  double range = 200.0;
  double pause = 30.0;
  double initial_energy = 100.0;
  double bi = 1.0;
  double sim_time = 500.0;
  double seconds_per_round = 1.0;
  std::uint64_t seed = 1;
  WeightParams weight_params;
  PhyConfig phy;
  std::optional<std::size_t> diameter_cap;
  std::vector<NodeArrival> node_arrivals;

  // Scripted-scenario extensions.
  std::vector<Position> positions;  // explicit initial layout, size n when set
  std::map<NodeId, double> weight_overrides;
  std::vector<Relocation> relocations;
  std::vector<EnergyDrain> energy_drains;
  RateNormalization reaffiliation_rate = RateNormalization::PerNode;

  Round hello_every() const { return static_cast<Round>(std::llround(bi / seconds_per_round)); }
  Round total_rounds() const { return static_cast<Round>(std::llround(sim_time / seconds_per_round)); }
  double threshold_joules() const { return phy.threshold_fraction * initial_energy; }
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid scenario configuration";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
  }
  std::vector<std::string> issues_;
};

/// Returns field-level diagnostics; empty when the config is runnable.
inline std::vector<std::string> validation_issues(const ScenarioConfig& c) {
  std::vector<std::string> issues;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };
  need(c.n >= 1, "n: must be >= 1");
  need(c.terrain.width > 0.0 && c.terrain.height > 0.0, "terrain: width and height must be > 0");
  need(c.vmax >= 0.0, "vmax: must be >= 0");
  need(c.vmin > 0.0, "vmin: must be > 0");
  need(c.range > 0.0, "range: must be > 0");
  need(c.pause >= 0.0, "pause: must be >= 0");
  need(c.initial_energy > 0.0, "initial_energy: must be > 0");
  need(c.seconds_per_round > 0.0, "seconds_per_round: must be > 0");
  need(c.sim_time > 0.0, "sim_time: must be > 0");
  if (c.bi > 0.0 && c.seconds_per_round > 0.0) {
    const double ratio = c.bi / c.seconds_per_round;
    need(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-9,
         "bi: must be a positive whole number of rounds");
  } else {
    need(false, "bi: must be > 0");
  }
  if (c.sim_time > 0.0 && c.seconds_per_round > 0.0) {
    const double ratio = c.sim_time / c.seconds_per_round;
    need(std::abs(ratio - std::round(ratio)) < 1e-9, "sim_time: must be a whole number of rounds");
  }
  try {
    c.weight_params.validate();
  } catch (const std::invalid_argument& e) {
    issues.push_back(std::string("weight_params: ") + e.what());
  }
  need(c.phy.model.reference_power > 0.0, "phy.reference_power: must be > 0");
  need(c.phy.model.path_loss_exponent > 0.0, "phy.path_loss_exponent: must be > 0");
  need(c.phy.noise_sigma_db >= 0.0, "phy.noise_sigma_db: must be >= 0");
  need(c.phy.tx_cost >= 0.0 && c.phy.rx_cost >= 0.0, "phy.tx_cost/rx_cost: must be >= 0");
  need(c.phy.threshold_fraction >= 0.0 && c.phy.threshold_fraction < 1.0,
       "phy.threshold_fraction: must be in [0, 1)");
  if (c.diameter_cap) need(*c.diameter_cap >= 1, "diameter_cap: must be >= 1");
  if (!c.positions.empty()) {
    need(c.positions.size() == c.n, "positions: must list exactly n positions");
    for (std::size_t i = 0; i < c.positions.size(); ++i) {
      need(c.terrain.contains(c.positions[i]), "positions[" + std::to_string(i) + "]: outside terrain");
    }
  }
  for (std::size_t i = 0; i < c.node_arrivals.size(); ++i) {
    need(c.terrain.contains(c.node_arrivals[i].pos), "node_arrivals[" + std::to_string(i) + "]: outside terrain");
  }
  const std::size_t population = c.n + c.node_arrivals.size();
  for (std::size_t i = 0; i < c.relocations.size(); ++i) {
    need(c.relocations[i].node < population, "relocations[" + std::to_string(i) + "].node: unknown node");
    need(c.terrain.contains(c.relocations[i].pos), "relocations[" + std::to_string(i) + "]: outside terrain");
  }
  for (std::size_t i = 0; i < c.energy_drains.size(); ++i) {
    need(c.energy_drains[i].node < population, "energy_drains[" + std::to_string(i) + "].node: unknown node");
    need(c.energy_drains[i].joules >= 0.0, "energy_drains[" + std::to_string(i) + "].joules: must be >= 0");
  }
  for (const auto& [id, _] : c.weight_overrides) {
    need(id < population, "weight_overrides: unknown node " + std::to_string(id));
  }
  return issues;
}

inline void validate(const ScenarioConfig& c) {
  auto issues = validation_issues(c);
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

using nlohmann::json;

inline Position position_from_json(const json& j) {
  if (j.is_array() && j.size() == 2) return Position{j[0].get<double>(), j[1].get<double>()};
  return Position{j.at("x").get<double>(), j.at("y").get<double>()};
}

inline json position_to_json(Position p) { return json::array({p.x, p.y}); }

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& path, std::vector<std::string>& issues) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    issues.push_back(path + key + ": wrong type");
  }
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path,
                           std::vector<std::string>& issues) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok |= it.key() == k;
    if (!ok) issues.push_back(path + it.key() + ": unknown key");
  }
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  using nlohmann::json;
  std::vector<std::string> issues;
  if (!j.is_object()) throw ConfigError({"<root>: expected an object"});
  ScenarioConfig c;
  detail::reject_unknown(j,
                         {"n", "terrain", "vmax", "vmin", "range", "pause", "initial_energy", "bi", "sim_time",
                          "seconds_per_round", "seed", "weight_params", "phy", "diameter_cap", "node_arrivals",
                          "positions", "weight_overrides", "relocations", "energy_drains", "reaffiliation_rate"},
                         "", issues);
  read_field(j, "n", c.n, "", issues);
  read_field(j, "vmax", c.vmax, "", issues);
  read_field(j, "vmin", c.vmin, "", issues);
  read_field(j, "range", c.range, "", issues);
  read_field(j, "pause", c.pause, "", issues);
  read_field(j, "initial_energy", c.initial_energy, "", issues);
  read_field(j, "bi", c.bi, "", issues);
  read_field(j, "sim_time", c.sim_time, "", issues);
  read_field(j, "seconds_per_round", c.seconds_per_round, "", issues);
  read_field(j, "seed", c.seed, "", issues);
  try {
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      if (t.is_array()) {
        c.terrain = Terrain{t.at(0).get<double>(), t.at(1).get<double>()};
      } else {
        c.terrain = Terrain{t.at("width").get<double>(), t.at("height").get<double>()};
      }
    }
  } catch (const json::exception&) {
    issues.push_back("terrain: expected [width, height]");
  }
  if (j.contains("weight_params")) {
    const auto& w = j.at("weight_params");
    detail::reject_unknown(w, {"alpha1", "alpha2", "alpha3", "inv_m_cap", "eq2_denominator", "normalize"},
                           "weight_params.", issues);
    read_field(w, "alpha1", c.weight_params.alpha1, "weight_params.", issues);
    read_field(w, "alpha2", c.weight_params.alpha2, "weight_params.", issues);
    read_field(w, "alpha3", c.weight_params.alpha3, "weight_params.", issues);
    read_field(w, "inv_m_cap", c.weight_params.inv_m_cap, "weight_params.", issues);
    read_field(w, "normalize", c.weight_params.normalize, "weight_params.", issues);
    if (w.contains("eq2_denominator")) {
      const auto d = w.at("eq2_denominator").get<std::string>();
      if (d == "included") {
        c.weight_params.denominator = MobilityDenominator::Included;
      } else if (d == "deg") {
        c.weight_params.denominator = MobilityDenominator::Degree;
      } else {
        issues.push_back("weight_params.eq2_denominator: expected \"included\" or \"deg\"");
      }
    }
  }
  if (j.contains("phy")) {
    const auto& p = j.at("phy");
    detail::reject_unknown(p,
                           {"reference_power", "path_loss_exponent", "noise_sigma_db", "tx_cost", "rx_cost",
                            "threshold_fraction"},
                           "phy.", issues);
    read_field(p, "reference_power", c.phy.model.reference_power, "phy.", issues);
    read_field(p, "path_loss_exponent", c.phy.model.path_loss_exponent, "phy.", issues);
    read_field(p, "noise_sigma_db", c.phy.noise_sigma_db, "phy.", issues);
    read_field(p, "tx_cost", c.phy.tx_cost, "phy.", issues);
    read_field(p, "rx_cost", c.phy.rx_cost, "phy.", issues);
    read_field(p, "threshold_fraction", c.phy.threshold_fraction, "phy.", issues);
  }
  try {
    if (j.contains("diameter_cap") && !j.at("diameter_cap").is_null()) {
      c.diameter_cap = j.at("diameter_cap").get<std::size_t>();
    }
    if (j.contains("node_arrivals")) {
      for (const auto& a : j.at("node_arrivals")) {
        c.node_arrivals.push_back({a.at("round").get<Round>(), detail::position_from_json(a.at("pos"))});
      }
    }
    if (j.contains("positions")) {
      for (const auto& p : j.at("positions")) c.positions.push_back(detail::position_from_json(p));
    }
    if (j.contains("weight_overrides")) {
      for (auto it = j.at("weight_overrides").begin(); it != j.at("weight_overrides").end(); ++it) {
        c.weight_overrides[static_cast<NodeId>(std::stoul(it.key()))] = it.value().get<double>();
      }
    }
    if (j.contains("relocations")) {
      for (const auto& r : j.at("relocations")) {
        c.relocations.push_back(
            {r.at("round").get<Round>(), r.at("node").get<NodeId>(), detail::position_from_json(r.at("pos"))});
      }
    }
    if (j.contains("energy_drains")) {
      for (const auto& d : j.at("energy_drains")) {
        c.energy_drains.push_back({d.at("round").get<Round>(), d.at("node").get<NodeId>(), d.at("joules").get<double>()});
      }
    }
    if (j.contains("reaffiliation_rate")) {
      const auto r = j.at("reaffiliation_rate").get<std::string>();
      if (r == "per_node") {
        c.reaffiliation_rate = RateNormalization::PerNode;
      } else if (r == "global") {
        c.reaffiliation_rate = RateNormalization::Global;
      } else {
        issues.push_back("reaffiliation_rate: expected \"per_node\" or \"global\"");
      }
    }
  } catch (const std::exception& e) {
    issues.push_back(std::string("scripted events: malformed entry (") + e.what() + ")");
  }
  auto more = validation_issues(c);
  issues.insert(issues.end(), more.begin(), more.end());
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json j;
  j["n"] = c.n;
  j["terrain"] = json::array({c.terrain.width, c.terrain.height});
  j["vmax"] = c.vmax;
  j["vmin"] = c.vmin;
  j["range"] = c.range;
  j["pause"] = c.pause;
  j["initial_energy"] = c.initial_energy;
  j["bi"] = c.bi;
  j["sim_time"] = c.sim_time;
  j["seconds_per_round"] = c.seconds_per_round;
  j["seed"] = c.seed;
  j["weight_params"] = {{"alpha1", c.weight_params.alpha1},
                        {"alpha2", c.weight_params.alpha2},
                        {"alpha3", c.weight_params.alpha3},
                        {"inv_m_cap", c.weight_params.inv_m_cap},
                        {"eq2_denominator",
                         c.weight_params.denominator == MobilityDenominator::Included ? "included" : "deg"},
                        {"normalize", c.weight_params.normalize}};
  j["phy"] = {{"reference_power", c.phy.model.reference_power},
              {"path_loss_exponent", c.phy.model.path_loss_exponent},
              {"noise_sigma_db", c.phy.noise_sigma_db},
              {"tx_cost", c.phy.tx_cost},
              {"rx_cost", c.phy.rx_cost},
              {"threshold_fraction", c.phy.threshold_fraction}};
  j["diameter_cap"] = c.diameter_cap ? json(*c.diameter_cap) : json(nullptr);
  j["node_arrivals"] = json::array();
  for (const auto& a : c.node_arrivals) {
    j["node_arrivals"].push_back({{"round", a.round}, {"pos", detail::position_to_json(a.pos)}});
  }
  if (!c.positions.empty()) {
    j["positions"] = json::array();
    for (const auto& p : c.positions) j["positions"].push_back(detail::position_to_json(p));
  }
  if (!c.weight_overrides.empty()) {
    j["weight_overrides"] = json::object();
    for (const auto& [id, w] : c.weight_overrides) j["weight_overrides"][std::to_string(id)] = w;
  }
  if (!c.relocations.empty()) {
    j["relocations"] = json::array();
    for (const auto& r : c.relocations) {
      j["relocations"].push_back({{"round", r.round}, {"node", r.node}, {"pos", detail::position_to_json(r.pos)}});
    }
  }
  if (!c.energy_drains.empty()) {
    j["energy_drains"] = json::array();
    for (const auto& d : c.energy_drains) {
      j["energy_drains"].push_back({{"round", d.round}, {"node", d.node}, {"joules", d.joules}});
    }
  }
  j["reaffiliation_rate"] = c.reaffiliation_rate == RateNormalization::PerNode ? "per_node" : "global";
  return j;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open " + path});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("config: parse error: ") + e.what()});
  }
  return config_from_json(j);
}

}  // namespace sdwca
