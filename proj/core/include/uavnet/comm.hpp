#pragma once

#include <limits>
#include <span>
#include <vector>

#include "uavnet/autodiff.hpp"
#include "uavnet/geometry.hpp"

namespace uavnet::comm {

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct CommGraph {
  double radius = 0.0;
  std::vector<std::vector<int>> neighbors;  // ascending ids, self excluded
  std::vector<std::vector<int>> hops;       // kUnreachable when disconnected

  int size() const { return static_cast<int>(neighbors.size()); }
  int hop(int from, int to) const {
    return hops[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
  bool adjacent(int a, int b) const;
  int max_degree() const;
};

// Neighbors are UAVs within 3D distance `radius`; hop counts by breadth-first
// search.
CommGraph build_graph(std::span<const Vec3> positions, double radius);

// Graph from an explicit undirected edge list.
CommGraph graph_from_edges(int num_agents, std::span<const std::pair<int, int>> edges);

// Prior-decision broadcast: the sender's current local state plus its
// previous-slot fingerprint and belief.
struct Message {
  int sender = 0;
  int slot = 0;
  ad::Var state;
  ad::Var fingerprint;
  ad::Var belief;
};

Message compose_message(int sender, int slot, ad::Var state, ad::Var fingerprint, ad::Var belief);

// Per-agent inbox holding exactly the one-hop neighbors' messages of this
// slot, ordered by ascending sender id. `messages[i]` must come from agent i.
std::vector<std::vector<Message>> deliver(const CommGraph& graph, std::span<const Message> messages);

}  // namespace uavnet::comm
