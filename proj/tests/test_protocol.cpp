#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sdwca/protocol.hpp"

using namespace sdwca;

namespace {

NodeProtocolState node(NodeId id, double weight = 0.0) {
  NodeProtocolState s;
  s.id = id;
  s.energy = EnergyBook(100.0, 0.02, 0.01, 20.0);
  s.weight = weight;
  return s;
}

// Marks `ids` as heard in a hello round at `round`.
void hear(NodeProtocolState& s, Round round, std::initializer_list<std::pair<NodeId, Position>> ids, double range = 100.0) {
  for (const auto& [id, pos] : ids) ingest_hello(s, Hello{id, pos, round + 1, std::nullopt}, 1.0, round, {0, 0}, range);
  s.latest_hello_round = round;
  s.heard_any_hello = true;
}

}  // namespace

TEST(IngestHello, PairsNeedConsecutiveSequenceNumbers) {
  auto s = node(0);
  ingest_hello(s, Hello{1, {10, 0}, 1, std::nullopt}, 0.5, 0, {0, 0}, 100.0);
  EXPECT_FALSE(s.neighbors.at(1).pair_valid);
  ingest_hello(s, Hello{1, {20, 0}, 2, std::nullopt}, 0.25, 1, {0, 0}, 100.0);
  EXPECT_TRUE(s.neighbors.at(1).pair_valid);
  EXPECT_DOUBLE_EQ(*s.neighbors.at(1).prev_rss, 0.5);
  ingest_hello(s, Hello{1, {30, 0}, 4, std::nullopt}, 0.1, 3, {0, 0}, 100.0);
  EXPECT_FALSE(s.neighbors.at(1).pair_valid);
  EXPECT_EQ(s.neighbors.at(1).cls, NeighborClass::Strong);
}

TEST(IngestHello, RecordCreatedByOtherMessageDoesNotFormPair) {
  auto s = node(0);
  s.neighbors[1].advertised_weight = 3.0;  // from a WeightInfo, before any hello
  ingest_hello(s, Hello{1, {10, 0}, 1, std::nullopt}, 0.5, 0, {0, 0}, 100.0);
  EXPECT_FALSE(s.neighbors.at(1).pair_valid);
}

TEST(ComputeWeight, StrongDegreeAndOverride) {
  ProtocolParams p;
  p.range = 100.0;
  auto s = node(0);
  s.weight.reset();
  hear(s, 0, {{1, {10, 0}}, {2, {60, 0}}, {3, {90, 0}}});
  EXPECT_EQ(strong_degree(s), 1u);
  // No ratios yet: the inverse-mobility term sits at its cap.
  EXPECT_NEAR(compute_weight(s, p), (1.0 + 10.0 + 100.0) / 3.0, 1e-12);
  s.weight_override = 7.5;
  EXPECT_DOUBLE_EQ(compute_weight(s, p), 7.5);
}

TEST(Elect, OnlyLocalMaximaDeclare) {
  auto heavy = node(0, 5.0);
  heavy.weight_peers = {1, 2};
  heavy.neighbors[1].advertised_weight = 3.0;
  heavy.neighbors[2].advertised_weight = 5.0;  // tie, but id 0 < 2
  auto msg = elect(heavy);
  ASSERT_TRUE(msg);
  EXPECT_TRUE(heavy.role.is_head());
  EXPECT_TRUE(heavy.initial_head);

  auto light = node(1, 3.0);
  light.weight_peers = {0};
  light.neighbors[0].advertised_weight = 5.0;
  EXPECT_FALSE(elect(light));
  EXPECT_EQ(light.role.kind, RoleKind::Unknown);
}

TEST(HandleClusterInfo, JoinThenSwitchOnlyToHeavierHead) {
  auto s = node(5, 1.0);
  EXPECT_EQ(handle_cluster_info(s, ClusterInfo{1, 4.0}), AffiliationChange::Joined);
  EXPECT_EQ(s.role, Role::member(1));
  EXPECT_EQ(handle_cluster_info(s, ClusterInfo{2, 3.0}), AffiliationChange::None);
  EXPECT_EQ(s.role.ch, 1u);
  EXPECT_EQ(handle_cluster_info(s, ClusterInfo{3, 6.0}), AffiliationChange::Reaffiliated);
  EXPECT_EQ(s.role.ch, 3u);
}

TEST(AdjustmentStep, WaitsForHeavierUndecidedPeer) {
  auto s = node(4, 2.0);
  s.role.kind = RoleKind::Critical;
  s.critical_peers = {7};
  s.neighbors[7].advertised_weight = 3.0;
  hear(s, 10, {{7, {10, 0}}});
  StepOutput out;
  EXPECT_FALSE(adjustment_step(s, out));
  // Peer 7 becomes an adjustment head: 4 joins it.
  s.neighbors[7].advertised_ch = 7;
  auto msg = adjustment_step(s, out);
  ASSERT_TRUE(msg);
  EXPECT_EQ(s.role, Role::member(7));
  EXPECT_TRUE(std::holds_alternative<ClusterId>(msg->msg));
}

TEST(AdjustmentStep, HeaviestCriticalBecomesHead) {
  auto s = node(4, 9.0);
  s.role.kind = RoleKind::Critical;
  s.critical_peers = {7};
  s.neighbors[7].advertised_weight = 3.0;
  hear(s, 10, {{7, {10, 0}}});
  StepOutput out;
  auto msg = adjustment_step(s, out);
  ASSERT_TRUE(msg);
  EXPECT_TRUE(s.role.is_head());
  EXPECT_TRUE(std::holds_alternative<ClusterInfo>(msg->msg));
}

TEST(AdjustmentStep, DepartedPeerDoesNotBlock) {
  auto s = node(4, 2.0);
  s.role.kind = RoleKind::Critical;
  s.critical_peers = {7};
  s.neighbors[7].advertised_weight = 3.0;
  hear(s, 10, {{8, {10, 0}}});  // 7 no longer heard
  StepOutput out;
  ASSERT_TRUE(adjustment_step(s, out));
  EXPECT_TRUE(s.role.is_head());
}

TEST(BestAck, HeaviestThenLowestId) {
  EXPECT_FALSE(best_ack({}).has_value());
  EXPECT_EQ(*best_ack({{3, 1.0}, {5, 2.0}, {4, 2.0}}), 4u);
}

TEST(InterchangeCandidate, NeedsNewHeavierNeighbourWithTwoCommon) {
  auto s = node(0, 5.0);
  s.role = Role::head(0);
  hear(s, 20, {{1, {20, 0}}, {2, {0, 20}}, {3, {30, 30}}});
  s.last_heard = {1, 2};
  s.neighbors[3].advertised_weight = 8.0;
  // 3 is within range of both 1 and 2.
  EXPECT_EQ(interchange_candidate(s, {1, 2, 3}, 100.0), std::optional<NodeId>(3));
  // Lighter newcomer: no action.
  s.neighbors[3].advertised_weight = 4.0;
  EXPECT_FALSE(interchange_candidate(s, {1, 2, 3}, 100.0));
  // Only one neighbour in common.
  s.neighbors[3].advertised_weight = 8.0;
  s.neighbors[2].last_position = {-200, 0};
  EXPECT_FALSE(interchange_candidate(s, {1, 2, 3}, 100.0));
}

TEST(Maintenance, HeadBelowThresholdResigns) {
  ProtocolParams p;
  auto s = node(0, 5.0);
  s.role = Role::head(0);
  s.members = {1, 2};
  s.energy.drain(85.0);
  RoundContext ctx{50, false, {0, 0}, true};
  auto out = step(s, {}, ctx, p);
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<ChResign>(out.outbox[0].msg));
  EXPECT_TRUE(s.resigned);
  EXPECT_TRUE(s.members.empty());
  // A resigned head does not answer find_CH.
  auto out2 = step(s, {{FindCh{1}, 1.0}}, RoundContext{51, false, {0, 0}, true}, p);
  for (const auto& o : out2.outbox) EXPECT_FALSE(std::holds_alternative<ChAck>(o.msg));
}

TEST(Maintenance, UnansweredFindMakesSelfHead) {
  ProtocolParams p;
  auto s = node(3, 1.0);
  s.role = Role::member(9);
  s.latest_hello_round = 40;
  s.heard_any_hello = true;
  auto out = step(s, {}, RoundContext{41, true, {0, 0}, true}, p);
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<FindCh>(out.outbox[0].msg));
  EXPECT_TRUE(s.searching());
  step(s, {}, RoundContext{42, false, {0, 0}, true}, p);
  EXPECT_TRUE(s.searching());
  step(s, {}, RoundContext{43, false, {0, 0}, true}, p);
  EXPECT_TRUE(s.role.is_head());
  EXPECT_FALSE(s.searching());
}

TEST(Maintenance, FindJoinsBestAcknowledgingHead) {
  ProtocolParams p;
  auto s = node(3, 1.0);
  s.role = Role::member(9);
  s.latest_hello_round = 40;
  s.heard_any_hello = true;
  step(s, {}, RoundContext{41, true, {0, 0}, true}, p);
  auto out = step(s, {{ChAck{5, 2.0}, 1.0}, {ChAck{6, 4.0}, 1.0}}, RoundContext{43, false, {0, 0}, true}, p);
  EXPECT_EQ(s.role, Role::member(6));
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_EQ(std::get<ClusterId>(out.outbox[0].msg).ch, 6u);
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_EQ(out.events[0].kind, EventKind::Reaffiliated);
}

TEST(Maintenance, HeadAcksOncePerRound) {
  ProtocolParams p;
  auto s = node(2, 3.0);
  s.role = Role::head(2);
  auto out = step(s, {{FindCh{7}, 1.0}, {FindCh{8}, 1.0}}, RoundContext{60, false, {0, 0}, true}, p);
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<ChAck>(out.outbox[0].msg));
}

TEST(Maintenance, HandOverIsConfirmedByTheNewHeadsHello) {
  ProtocolParams p;
  auto s = node(3, 1.0);
  s.role = Role::member(9);
  s.latest_hello_round = 49;
  s.heard_any_hello = true;
  step(s, {{Hello{9, {10, 0}, 50, 5.0, 9}, 1.0}, {Hello{4, {20, 0}, 50, 6.0, 1}, 1.0}, {ClusterId{9, 4}, 1.0}},
       RoundContext{50, true, {0, 0}, true}, p);
  EXPECT_EQ(s.role, Role::member(4));
  EXPECT_EQ(s.pending, Pending::AwaitPromotion);

  auto confirmed = s;
  auto out = step(confirmed, {{Hello{9, {10, 0}, 51, 5.0, 4}, 1.0}, {Hello{4, {20, 0}, 51, 6.0, 4}, 1.0}},
                  RoundContext{51, true, {0, 0}, true}, p);
  EXPECT_TRUE(out.outbox.empty());
  EXPECT_EQ(confirmed.pending, Pending::None);

  // The hand-over never reached 4: it still follows head 1.
  out = step(s, {{Hello{9, {10, 0}, 51, 5.0, 4}, 1.0}, {Hello{4, {20, 0}, 51, 6.0, 1}, 1.0}},
             RoundContext{51, true, {0, 0}, true}, p);
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<FindCh>(out.outbox[0].msg));
  EXPECT_EQ(out.outbox[0].note, "handoff");
}

TEST(Maintenance, MemberLeavesHeadThatStoppedLeading) {
  ProtocolParams p;
  auto s = node(3, 1.0);
  s.role = Role::member(9);
  s.latest_hello_round = 49;
  s.heard_any_hello = true;
  auto out = step(s, {{Hello{9, {10, 0}, 50, 5.0, 9}, 1.0}}, RoundContext{50, true, {0, 0}, true}, p);
  EXPECT_TRUE(out.outbox.empty());
  out = step(s, {{Hello{9, {10, 0}, 51, 5.0, 7}, 1.0}}, RoundContext{51, true, {0, 0}, true}, p);
  ASSERT_EQ(out.outbox.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<FindCh>(out.outbox[0].msg));
  EXPECT_TRUE(s.searching());
}

TEST(Step, DeadNodeIsInert) {
  ProtocolParams p;
  auto s = node(1);
  s.role.kind = RoleKind::Dead;
  auto out = step(s, {{FindCh{2}, 1.0}}, RoundContext{10, true, {0, 0}, true}, p);
  EXPECT_TRUE(out.outbox.empty());
  EXPECT_TRUE(out.events.empty());
}

TEST(AdjustClusters, MatchesGreedyOracleOnCriticalSubgraphs) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> up(0.0, 300.0), uw(0.0, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 10;
    std::vector<oracle::Pt> pts;
    std::map<NodeId, Position> pos;
    std::vector<double> w;
    std::map<NodeId, NodeProtocolState> states;
    for (NodeId i = 0; i < n; ++i) {
      pts.push_back({up(rng), up(rng)});
      pos[i] = {pts.back().x, pts.back().y};
      w.push_back(uw(rng));
      states[i] = node(i, w.back());
    }
    // Treat every node as critical: the oracle's adjustment alone then decides.
    const auto a = oracle::adjacency(pts, 100.0);
    std::set<NodeId> critical;
    for (NodeId i = 0; i < n; ++i) critical.insert(i);
    adjust_clusters(critical, states, TopologySnapshot(pos, 100.0));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return oracle::heavier(w, x, y); });
    std::vector<int> ch(n, -1);
    for (std::size_t u : order) {
      if (ch[u] >= 0) continue;
      ch[u] = static_cast<int>(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (a[u][v] && ch[v] < 0) ch[v] = static_cast<int>(u);
      }
    }
    for (NodeId i = 0; i < n; ++i) {
      EXPECT_EQ(static_cast<int>(states.at(i).role.ch), ch[i]);
      EXPECT_EQ(states.at(i).role.is_head(), ch[i] == static_cast<int>(i));
    }
  }
}

TEST(ClassifyOutcome, PerfectFairlyPerfectIncomplete) {
  std::map<NodeId, NodeProtocolState> states;
  states[0] = node(0);
  states[0].role = Role::head(0);
  states[1] = node(1);
  states[1].role = Role::member(0);
  EXPECT_EQ(classify_outcome(states), Outcome::Perfect);
  states[1].was_critical = true;
  EXPECT_EQ(classify_outcome(states), Outcome::FairlyPerfect);
  states[2] = node(2);
  EXPECT_EQ(classify_outcome(states), Outcome::Incomplete);
}
