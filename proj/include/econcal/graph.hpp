#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "econcal/rng.hpp"

namespace econcal {

struct CompleteTopology {};

/// Agents on a circle; each trades with everyone except itself and its
/// `comparison_radius` nearest neighbours on each side.
struct CircleExcludingComparison {
  std::size_t comparison_radius = 1;
};

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double rate = 1.0;
};

struct ExplicitEdges {
  std::vector<Edge> edges;
};

using Topology = std::variant<CompleteTopology, CircleExcludingComparison, ExplicitEdges>;

/// Connected encounter graph without self-loops. Complete and circle
/// topologies are kept implicit.
class EncounterGraph {
 public:
  std::size_t size() const { return n_agents_; }
  const Topology& topology() const { return topology_; }
  std::size_t edge_count() const;
  bool has_edge(std::size_t i, std::size_t j) const;
  /// Comparison radius for neighbour-dependent utilities (1 unless the
  /// topology is a circle).
  std::size_t comparison_radius() const;

  /// Draw an edge; equal-rate topologies are uniform over edges, explicit
  /// edges are drawn in proportion to their rates.
  std::pair<std::size_t, std::size_t> draw_edge(Rng& rng) const;

  /// Neighbours of `i` in the encounter graph.
  std::vector<std::size_t> neighbours(std::size_t i) const;

 private:
  friend EncounterGraph build_encounter_graph(const Topology&, std::size_t);
  EncounterGraph(Topology topology, std::size_t n_agents);

  Topology topology_;
  std::size_t n_agents_ = 0;
  mutable std::discrete_distribution<std::size_t> edge_pick_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// Throws ConfigError when the result would be disconnected, since the
/// existence of an entropy function presumes a connected encounter graph.
EncounterGraph build_encounter_graph(const Topology& topology, std::size_t n_agents);

/// Breadth-first connectivity test over an arbitrary neighbour function.
template <class Neighbours>
bool connected(std::size_t n, const Neighbours& neighbours) {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    for (std::size_t v : neighbours(queue[q])) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
    }
  }
  return reached == n;
}

}  // namespace econcal
