#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace sdwca {

/// Power-law received signal strength model, P0 / d^n.
struct PhyModel {
  double reference_power = 1.0;
  double path_loss_exponent = 2.0;
};

inline constexpr double kMinDistance = 0.1;  // co-located nodes clamp here

inline double received_strength(const PhyModel& model, double ed) {
  if (!(model.reference_power > 0.0) || !(model.path_loss_exponent > 0.0)) {
    throw std::invalid_argument("received_strength: model parameters must be > 0");
  }
  if (ed < 0.0) throw std::invalid_argument("received_strength: negative distance");
  const double d = std::max(ed, kMinDistance);
  return model.reference_power / std::pow(d, model.path_loss_exponent);
}

/// Two successive strengths received from the same neighbour.
struct RssSamplePair {
  double r1 = 0.0;  // older sample
  double r2 = 0.0;  // newer sample
  bool seq_gap_ok = false;
};

/// Ratio r1/r2: < 1 approaching, > 1 receding, = 1 steady.
/// nullopt marks a pair excluded from weighting.
inline std::optional<double> relative_mobility(const RssSamplePair& pair) {
  if (!pair.seq_gap_ok) return std::nullopt;
  if (!(pair.r1 > 0.0) || !(pair.r2 > 0.0)) {
    throw std::invalid_argument("relative_mobility: strengths must be > 0");
  }
  return pair.r1 / pair.r2;
}

enum class Direction { Tx, Rx };

/// Residual energy bookkeeping for one node. Consumption only grows; once the
/// residual cannot pay for a message the node is dead for good.
class EnergyBook {
 public:
  static constexpr double kEpsilon = 1e-9;

  EnergyBook() = default;
  EnergyBook(double initial, double tx_cost, double rx_cost, double threshold)
      : initial_(initial), tx_cost_(tx_cost), rx_cost_(rx_cost), threshold_(threshold) {
    if (initial < 0.0 || tx_cost < 0.0 || rx_cost < 0.0 || threshold < 0.0) {
      throw std::invalid_argument("EnergyBook: parameters must be non-negative");
    }
    dead_ = initial_ <= kEpsilon;
  }

  double initial() const { return initial_; }
  double consumed() const { return consumed_; }
  double residual() const { return std::max(0.0, initial_ - consumed_); }
  double threshold() const { return threshold_; }
  double tx_cost() const { return tx_cost_; }
  double rx_cost() const { return rx_cost_; }
  bool dead() const { return dead_; }
  bool below_threshold() const { return residual() < threshold_; }

  /// Returns true when the message could be paid for (and was). A message the
  /// node cannot afford is not sent/processed and the node dies.
  bool debit(Direction dir) { return spend(dir == Direction::Tx ? tx_cost_ : rx_cost_); }

  /// External drain (scripted); kills the node when it empties the battery.
  void drain(double joules) {
    if (dead_ || joules <= 0.0) return;
    consumed_ = std::min(initial_, consumed_ + joules);
    if (residual() <= kEpsilon) kill();
  }

 private:
  bool spend(double cost) {
    if (dead_) return false;
    if (cost > residual() + kEpsilon) {
      kill();
      return false;
    }
    consumed_ = std::min(initial_, consumed_ + cost);
    if (residual() <= kEpsilon) kill();
    return true;
  }

  void kill() {
    consumed_ = initial_;
    dead_ = true;
  }

  double initial_ = 100.0;
  double consumed_ = 0.0;
  double tx_cost_ = 0.02;
  double rx_cost_ = 0.01;
  double threshold_ = 20.0;
  bool dead_ = false;
};

/// Free-function form of EnergyBook::debit.
inline EnergyBook debit(EnergyBook book, Direction dir) {
  book.debit(dir);
  return book;
}

}  // namespace sdwca
