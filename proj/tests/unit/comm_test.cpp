#include <gtest/gtest.h>

#include <random>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "uavnet/comm.hpp"

namespace uavnet::comm {
namespace {

std::vector<Message> make_messages(ad::Tape& tape, int n, int slot) {
  std::vector<Message> out;
  for (int i = 0; i < n; ++i) {
    const auto v = tape.constant(ad::Tensor::vector({static_cast<double>(i)}));
    out.push_back(compose_message(i, slot, v, v, v));
  }
  return out;
}

TEST(GraphTest, SingleAgent) {
  const std::vector<Vec3> p{{1.0, 2.0, 3.0}};
  const CommGraph g = build_graph(p, 10.0);
  EXPECT_EQ(g.size(), 1);
  EXPECT_TRUE(g.neighbors[0].empty());
  EXPECT_EQ(g.hop(0, 0), 0);
}

TEST(GraphTest, ChainAtExactRadius) {
  const std::vector<Vec3> p{{0.0, 0.0, 60.0}, {10.0, 0.0, 60.0}, {20.0, 0.0, 60.0}};
  const CommGraph g = build_graph(p, 10.0);
  EXPECT_EQ(g.neighbors[0], std::vector<int>{1});
  EXPECT_EQ(g.neighbors[1], (std::vector<int>{0, 2}));
  EXPECT_EQ(g.hop(0, 2), 2);
  EXPECT_EQ(g.hop(2, 0), 2);
  EXPECT_EQ(g.max_degree(), 2);
}

TEST(GraphTest, AltitudeCountsInDistance) {
  const std::vector<Vec3> p{{0.0, 0.0, 60.0}, {0.0, 0.0, 72.0}};
  EXPECT_EQ(build_graph(p, 10.0).hop(0, 1), kUnreachable);
  EXPECT_EQ(build_graph(p, 12.0).hop(0, 1), 1);
}

TEST(GraphTest, MatchesAllPairsOracle) {
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xy(0.0, 60.0);
    std::uniform_real_distribution<double> z(30.0, 40.0);
    std::vector<Vec3> p(10);
    for (auto& v : p) v = {xy(rng), xy(rng), z(rng)};
    const CommGraph g = build_graph(p, 18.0);
    std::vector<std::vector<bool>> adjacent(10, std::vector<bool>(10, false));
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) adjacent[i][j] = i != j && distance(p[i], p[j]) <= 18.0;
    }
    const auto expected = oracle::floyd_warshall(adjacent);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        EXPECT_EQ(g.hop(i, j), expected[i][j]);
        EXPECT_EQ(g.hop(i, j), g.hop(j, i));
        EXPECT_EQ(g.adjacent(i, j), static_cast<bool>(adjacent[i][j]));
      }
    }
  }
}

TEST(GraphTest, TriangleInequality) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> xy(0.0, 50.0);
  std::vector<Vec3> p(8);
  for (auto& v : p) v = {xy(rng), xy(rng), 60.0};
  const CommGraph g = build_graph(p, 15.0);
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      for (int c = 0; c < 8; ++c) {
        if (g.hop(a, c) == kUnreachable || g.hop(c, b) == kUnreachable) continue;
        EXPECT_LE(g.hop(a, b), g.hop(a, c) + g.hop(c, b));
      }
    }
  }
}

TEST(GraphTest, FromEdges) {
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {1, 0}};
  const CommGraph g = graph_from_edges(5, edges);
  EXPECT_EQ(g.neighbors[1], (std::vector<int>{0, 2}));
  EXPECT_EQ(g.hop(0, 3), 3);
  EXPECT_EQ(g.hop(0, 4), kUnreachable);
  const std::vector<std::pair<int, int>> loop{{2, 2}};
  EXPECT_THROW(graph_from_edges(3, loop), std::invalid_argument);
  EXPECT_THROW(build_graph(std::vector<Vec3>{}, 1.0), std::invalid_argument);
}

TEST(DeliverTest, IsolatedAgentHasEmptyInbox) {
  ad::Tape tape;
  const CommGraph g = graph_from_edges(3, std::vector<std::pair<int, int>>{{0, 1}});
  const auto inbox = deliver(g, make_messages(tape, 3, 1));
  EXPECT_TRUE(inbox[2].empty());
  ASSERT_EQ(inbox[0].size(), 1u);
  EXPECT_EQ(inbox[0][0].sender, 1);
}

TEST(DeliverTest, OneHopOnlyInAscendingOrder) {
  ad::Tape tape;
  const CommGraph g = graph_from_edges(4, std::vector<std::pair<int, int>>{{2, 1}, {1, 0}, {3, 1}});
  const auto messages = make_messages(tape, 4, 7);
  const auto inbox = deliver(g, messages);
  ASSERT_EQ(inbox[1].size(), 3u);
  EXPECT_EQ(inbox[1][0].sender, 0);
  EXPECT_EQ(inbox[1][1].sender, 2);
  EXPECT_EQ(inbox[1][2].sender, 3);
  ASSERT_EQ(inbox[2].size(), 1u);
  EXPECT_EQ(inbox[2][0].sender, 1);
  for (const auto& box : inbox) {
    for (const Message& m : box) EXPECT_EQ(m.slot, 7);
  }
}

TEST(DeliverTest, BroadcastPayloadIsIdentical) {
  ad::Tape tape;
  const CommGraph g = graph_from_edges(3, std::vector<std::pair<int, int>>{{0, 1}, {0, 2}});
  const auto inbox = deliver(g, make_messages(tape, 3, 1));
  EXPECT_EQ(inbox[1][0].state.id(), inbox[2][0].state.id());
  EXPECT_EQ(inbox[1][0].belief.id(), inbox[2][0].belief.id());
  EXPECT_EQ(inbox[1][0].fingerprint.id(), inbox[2][0].fingerprint.id());
}

TEST(DeliverTest, RejectsMisindexedMessages) {
  ad::Tape tape;
  const CommGraph g = graph_from_edges(2, std::vector<std::pair<int, int>>{{0, 1}});
  auto messages = make_messages(tape, 2, 1);
  std::swap(messages[0], messages[1]);
  EXPECT_THROW(deliver(g, messages), std::invalid_argument);
  messages.pop_back();
  EXPECT_THROW(deliver(g, messages), std::invalid_argument);
}

}  // namespace
}  // namespace uavnet::comm
