#pragma once

// Node weight: strong degree, inverse mobility and residual energy.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdwca/geo_graph.hpp"

namespace sdwca {

/// Which count divides the squared deviations in the mobility metric.
enum class MobilityDenominator {
  Included,  // neighbours that contributed a ratio
  Degree,    // every current neighbour, excluded or not
};

struct MobilitySampleSet {
  std::vector<std::pair<NodeId, double>> ratios;
  std::size_t degree = 0;  // current neighbours, used by MobilityDenominator::Degree

  std::size_t included_count() const { return ratios.size(); }
};

/// RMS deviation of the relative-mobility ratios from 1. nullopt when there
/// is nothing to average; the weight then uses the capped inverse term.
inline std::optional<double> mobility_metric(const MobilitySampleSet& samples,
                                             MobilityDenominator denom = MobilityDenominator::Included) {
  const std::size_t count =
      denom == MobilityDenominator::Included ? samples.ratios.size() : std::max(samples.degree, samples.ratios.size());
  if (samples.ratios.empty() || count == 0) return std::nullopt;
  double sum = 0.0;
  for (const auto& [_, ratio] : samples.ratios) sum += (ratio - 1.0) * (ratio - 1.0);
  return std::sqrt(sum / static_cast<double>(count));
}

/// Fixed scales used when the optional normalised mode is on; each component
/// is divided by its scale so all three land in [0, 1].
struct WeightScales {
  double max_strong_degree = 1.0;
  double initial_energy = 1.0;
};

struct WeightParams {
  double alpha1 = 1.0 / 3.0;
  double alpha2 = 1.0 / 3.0;
  double alpha3 = 1.0 / 3.0;
  double inv_m_cap = 10.0;
  MobilityDenominator denominator = MobilityDenominator::Included;
  bool normalize = false;

  void validate() const {
    if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0) {
      throw std::invalid_argument("WeightParams: weighing factors must be non-negative");
    }
    if (std::abs(alpha1 + alpha2 + alpha3 - 1.0) > 1e-9) {
      throw std::invalid_argument("WeightParams: weighing factors must sum to 1");
    }
    if (!(inv_m_cap > 0.0)) throw std::invalid_argument("WeightParams: inv_m_cap must be > 0");
  }
};

inline double inverse_mobility_term(std::optional<double> m, double cap) {
  if (!m || *m <= 0.0) return cap;
  return std::min(1.0 / *m, cap);
}

inline double node_weight(std::size_t strong_degree, std::optional<double> mobility, double residual_energy,
                          const WeightParams& p, const WeightScales& scales = {}) {
  if (residual_energy < 0.0) throw std::invalid_argument("node_weight: residual energy must be >= 0");
  double degree_term = static_cast<double>(strong_degree);
  double mobility_term = inverse_mobility_term(mobility, p.inv_m_cap);
  double energy_term = residual_energy;
  if (p.normalize) {
    degree_term /= std::max(scales.max_strong_degree, 1.0);
    mobility_term /= p.inv_m_cap;
    energy_term /= std::max(scales.initial_energy, 1e-12);
  }
  return p.alpha1 * degree_term + p.alpha2 * mobility_term + p.alpha3 * energy_term;
}

/// Strict total order used for every weight comparison: heavier wins, and on
/// equal weight the lower id wins.
inline bool outranks(double weight_a, NodeId a, double weight_b, NodeId b) {
  if (weight_a != weight_b) return weight_a > weight_b;
  return a < b;
}

}  // namespace sdwca
