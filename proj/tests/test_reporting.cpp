#include <gtest/gtest.h>

#include <sstream>

#include "sdwca/engine.hpp"
#include "sdwca/reporting.hpp"

using namespace sdwca;

namespace {

TopologySnapshot star(std::vector<double> member_distances, double range) {
  std::map<NodeId, Position> pos{{0, {0, 0}}};
  for (NodeId i = 0; i < member_distances.size(); ++i) pos[i + 1] = {member_distances[i], 0};
  return TopologySnapshot(pos, range);
}

}  // namespace

TEST(RankCluster, Bands) {
  EXPECT_EQ(rank_cluster(0, {1, 2}, star({10, 50}, 100)), ClusterRank::Strong);
  EXPECT_EQ(rank_cluster(0, {1, 2}, star({60, 90}, 100)), ClusterRank::Intermediate);
  EXPECT_EQ(rank_cluster(0, {1, 2}, star({51, 75}, 100)), ClusterRank::Medium);
  EXPECT_EQ(rank_cluster(0, {1, 2}, star({76, 100}, 100)), ClusterRank::Weak);
  EXPECT_EQ(rank_cluster(0, {}, star({}, 100)), ClusterRank::Strong);
}

TEST(RankCluster, NonAdjacentMemberIsAnIntegrityFault) {
  EXPECT_THROW(rank_cluster(0, {1}, star({150}, 100)), std::logic_error);
}

TEST(Metrics, StaticWorldHasConstantClusterSeries) {
  ScenarioConfig c;
  c.vmax = 0.0;
  c.sim_time = 60;
  World w = run_scenario(c);
  ASSERT_FALSE(w.series().empty());
  for (const auto& row : w.series()) {
    EXPECT_EQ(row.clusters, w.series().front().clusters);
    EXPECT_EQ(row.maintenance, 0u);
    std::size_t ranked = 0;
    for (auto r : row.ranks) ranked += r;
    EXPECT_EQ(ranked, row.clusters);  // every cluster gets exactly one rank
  }
}

TEST(Metrics, SingleNodeIsOneCluster) {
  ScenarioConfig c;
  c.n = 1;
  c.sim_time = 30;
  World w = run_scenario(c);
  ASSERT_FALSE(w.series().empty());
  for (const auto& row : w.series()) EXPECT_EQ(row.clusters, 1u);
  EXPECT_DOUBLE_EQ(w.report().avg_clusters, 1.0);
}

TEST(Metrics, RateUsesConfiguredNormalisation) {
  ScenarioConfig c;
  c.sim_time = 200;
  c.vmax = 20;
  const auto per_node = run_scenario(c).report();
  c.reaffiliation_rate = RateNormalization::Global;
  const auto global = run_scenario(c).report();
  EXPECT_EQ(per_node.reaffiliations, global.reaffiliations);
  EXPECT_DOUBLE_EQ(global.reaffiliation_rate, static_cast<double>(global.reaffiliations) / 200.0);
  EXPECT_DOUBLE_EQ(per_node.reaffiliation_rate, global.reaffiliation_rate / 50.0);
}

TEST(Csv, SeriesRoundTrip) {
  ScenarioConfig c;
  c.sim_time = 80;
  World w = run_scenario(c);
  std::stringstream ss;
  write_series_csv(ss, w.series());
  const auto back = read_series_csv(ss);
  EXPECT_EQ(back, w.series());
}

TEST(Csv, SummaryRoundTripIsByteStable) {
  ScenarioConfig c;
  c.sim_time = 80;
  std::vector<MetricsReport> reps;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    c.seed = seed;
    reps.push_back(run_scenario(c).report());
  }
  std::stringstream first;
  write_summary_csv(first, reps);
  const std::string text = first.str();
  std::stringstream in(text);
  const auto back = read_summary_csv(in);
  ASSERT_EQ(back.size(), reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    EXPECT_EQ(back[i].seed, reps[i].seed);
    EXPECT_EQ(back[i].avg_clusters, reps[i].avg_clusters);
    EXPECT_EQ(back[i].reaffiliation_rate, reps[i].reaffiliation_rate);
    EXPECT_EQ(back[i].avg_ranks, reps[i].avg_ranks);
    EXPECT_EQ(back[i].maintenance, reps[i].maintenance);
    EXPECT_EQ(back[i].formation_round, reps[i].formation_round);
  }
  std::stringstream again;
  write_summary_csv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(Csv, RejectsForeignHeader) {
  std::stringstream ss("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_series_csv(ss), std::runtime_error);
}

TEST(Ledger, CompletenessAgainstTrace) {
  ScenarioConfig c;
  c.sim_time = 150;
  c.vmax = 15;
  World w = run_scenario(c);
  const auto& l = w.ledger();
  std::size_t broadcasts = 0;
  for (const auto& r : w.trace().records()) broadcasts += message_kind_from_string(r.event).has_value();
  EXPECT_EQ(l.total(), broadcasts);
  EXPECT_EQ(l.hello + l.formation() + l.maintenance(), l.total());
}

TEST(Audit, StaticScenariosPassForManySizes) {
  for (std::size_t n = 5; n <= 50; n += 5) {
    ScenarioConfig c;
    c.n = n;
    c.vmax = 0.0;
    c.sim_time = 20;
    World w = run_scenario(c);
    const auto a = w.audit();
    std::ostringstream os;
    a.write(os);
    EXPECT_TRUE(a.passed()) << "n=" << n << "\n" << os.str();
    EXPECT_EQ(w.ledger().hello, n * 20);
  }
}

TEST(Audit, DetectsTamperedLedger) {
  ScenarioConfig c;
  c.n = 10;
  c.vmax = 0.0;
  c.sim_time = 10;
  World w = run_scenario(c);
  auto ledger = w.ledger();
  ledger.hello += 1;
  EXPECT_FALSE(audit_overhead(ledger, c, w.trace()).passed());
}
