#include <gtest/gtest.h>

#include <cmath>

#include "sdwca/phy.hpp"

using namespace sdwca;

TEST(ReceivedStrength, InverseSquareByDefault) {
  const PhyModel m;
  EXPECT_DOUBLE_EQ(received_strength(m, 10.0), 0.01);
  EXPECT_DOUBLE_EQ(received_strength(m, 100.0), 1e-4);
  // Halving the distance quadruples the strength.
  EXPECT_DOUBLE_EQ(received_strength(m, 25.0) / received_strength(m, 50.0), 4.0);
}

TEST(ReceivedStrength, ClampsCoLocatedNodes) {
  const PhyModel m;
  EXPECT_DOUBLE_EQ(received_strength(m, 0.0), received_strength(m, kMinDistance));
  EXPECT_TRUE(std::isfinite(received_strength(m, 0.0)));
}

TEST(ReceivedStrength, CustomExponentAndPower) {
  const PhyModel m{2.5, 3.0};
  EXPECT_DOUBLE_EQ(received_strength(m, 2.0), 2.5 / 8.0);
  EXPECT_THROW(received_strength(PhyModel{0.0, 2.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(received_strength(m, -1.0), std::invalid_argument);
}

TEST(RelativeMobility, RatioOfOlderToNewer) {
  const PhyModel m;
  // Moving from 100 m to 50 m: the newer sample is 4x stronger.
  const auto approach = relative_mobility({received_strength(m, 100.0), received_strength(m, 50.0), true});
  ASSERT_TRUE(approach);
  EXPECT_DOUBLE_EQ(*approach, 0.25);
  const auto recede = relative_mobility({received_strength(m, 50.0), received_strength(m, 100.0), true});
  EXPECT_DOUBLE_EQ(*recede, 4.0);
  EXPECT_DOUBLE_EQ(*relative_mobility({0.3, 0.3, true}), 1.0);
}

TEST(RelativeMobility, GapOrZeroStrength) {
  EXPECT_FALSE(relative_mobility({1.0, 2.0, false}).has_value());
  EXPECT_THROW(relative_mobility({0.0, 1.0, true}), std::invalid_argument);
}

TEST(EnergyBook, DebitsAndThreshold) {
  EnergyBook b(100.0, 0.02, 0.01, 20.0);
  EXPECT_TRUE(b.debit(Direction::Tx));
  EXPECT_TRUE(b.debit(Direction::Rx));
  EXPECT_NEAR(b.residual(), 100.0 - 0.03, 1e-12);
  EXPECT_NEAR(b.consumed(), 0.03, 1e-12);
  EXPECT_FALSE(b.below_threshold());
  b.drain(80.0);
  EXPECT_TRUE(b.below_threshold());
  EXPECT_FALSE(b.dead());
}

TEST(EnergyBook, DiesWhenMessageUnaffordable) {
  EnergyBook b(0.05, 0.02, 0.01, 0.0);
  EXPECT_TRUE(b.debit(Direction::Tx));
  EXPECT_TRUE(b.debit(Direction::Tx));
  EXPECT_TRUE(b.debit(Direction::Rx));
  EXPECT_TRUE(b.dead());
  EXPECT_FALSE(b.debit(Direction::Rx));
  EXPECT_EQ(b.residual(), 0.0);
}

TEST(EnergyBook, ResidualNeverIncreases) {
  EnergyBook b(1.0, 0.02, 0.01, 0.2);
  double last = b.residual();
  for (int i = 0; i < 200; ++i) {
    b.debit(i % 3 ? Direction::Rx : Direction::Tx);
    EXPECT_LE(b.residual(), last);
    last = b.residual();
  }
  EXPECT_TRUE(b.dead());
}

TEST(EnergyBook, FreeFunctionLeavesOriginal) {
  const EnergyBook b(100.0, 0.02, 0.01, 20.0);
  const auto after = debit(b, Direction::Tx);
  EXPECT_DOUBLE_EQ(b.residual(), 100.0);
  EXPECT_NEAR(after.residual(), 99.98, 1e-12);
  EXPECT_THROW(EnergyBook(-1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}
