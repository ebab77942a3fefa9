#include "uavnet/comm.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace uavnet::comm {

namespace {

void fill_hops(CommGraph& g) {
  const std::size_t n = g.neighbors.size();
  g.hops.assign(n, std::vector<int>(n, kUnreachable));
  for (std::size_t s = 0; s < n; ++s) {
    auto& dist = g.hops[s];
    dist[s] = 0;
    std::deque<int> frontier{static_cast<int>(s)};
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (int v : g.neighbors[static_cast<std::size_t>(u)]) {
        auto& dv = dist[static_cast<std::size_t>(v)];
        if (dv == kUnreachable) {
          dv = dist[static_cast<std::size_t>(u)] + 1;
          frontier.push_back(v);
        }
      }
    }
  }
}

}  // namespace

bool CommGraph::adjacent(int a, int b) const {
  const auto& n = neighbors[static_cast<std::size_t>(a)];
  return std::binary_search(n.begin(), n.end(), b);
}

int CommGraph::max_degree() const {
  std::size_t best = 0;
  for (const auto& n : neighbors) best = std::max(best, n.size());
  return static_cast<int>(best);
}

CommGraph build_graph(std::span<const Vec3> positions, double radius) {
  if (positions.empty()) throw std::invalid_argument("build_graph: no agents");
  CommGraph g;
  g.radius = radius;
  const std::size_t n = positions.size();
  g.neighbors.resize(n);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && squared_distance(positions[i], positions[j]) <= r2) {
        g.neighbors[i].push_back(static_cast<int>(j));
      }
    }
  }
  fill_hops(g);
  return g;
}

CommGraph graph_from_edges(int num_agents, std::span<const std::pair<int, int>> edges) {
  if (num_agents < 1) throw std::invalid_argument("graph_from_edges: no agents");
  CommGraph g;
  g.neighbors.resize(static_cast<std::size_t>(num_agents));
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_agents || b >= num_agents || a == b) {
      throw std::invalid_argument("graph_from_edges: invalid edge");
    }
    g.neighbors[static_cast<std::size_t>(a)].push_back(b);
    g.neighbors[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& n : g.neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  fill_hops(g);
  return g;
}

Message compose_message(int sender, int slot, ad::Var state, ad::Var fingerprint, ad::Var belief) {
  return Message{sender, slot, state, fingerprint, belief};
}

std::vector<std::vector<Message>> deliver(const CommGraph& graph, std::span<const Message> messages) {
  if (static_cast<int>(messages.size()) != graph.size()) {
    throw std::invalid_argument("deliver: one message per agent required");
  }
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].sender != static_cast<int>(i)) {
      throw std::invalid_argument("deliver: messages must be indexed by sender");
    }
  }
  std::vector<std::vector<Message>> inbox(messages.size());
  for (std::size_t j = 0; j < messages.size(); ++j) {
    for (int i : graph.neighbors[j]) inbox[j].push_back(messages[static_cast<std::size_t>(i)]);
  }
  return inbox;
}

}  // namespace uavnet::comm
