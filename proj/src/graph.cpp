#include "econcal/graph.hpp"

#include <algorithm>
#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

std::size_t circle_distance(std::size_t i, std::size_t j, std::size_t n) {
  const std::size_t d = i > j ? i - j : j - i;
  return std::min(d, n - d);
}

}  // namespace

EncounterGraph::EncounterGraph(Topology topology, std::size_t n_agents)
    : topology_(std::move(topology)), n_agents_(n_agents) {
  if (const auto* ex = std::get_if<ExplicitEdges>(&topology_)) {
    std::vector<double> rates;
    rates.reserve(ex->edges.size());
    adjacency_.assign(n_agents_, {});
    for (const Edge& e : ex->edges) {
      rates.push_back(e.rate);
      adjacency_[e.a].push_back(e.b);
      adjacency_[e.b].push_back(e.a);
    }
    edge_pick_ = std::discrete_distribution<std::size_t>(rates.begin(), rates.end());
  }
}

std::size_t EncounterGraph::edge_count() const {
  const std::size_t n = n_agents_;
  if (std::holds_alternative<CompleteTopology>(topology_)) return n * (n - 1) / 2;
  if (const auto* c = std::get_if<CircleExcludingComparison>(&topology_)) {
    const std::size_t excluded = std::min(n - 1, 2 * c->comparison_radius);
    return n * (n - 1 - excluded) / 2;
  }
  return std::get<ExplicitEdges>(topology_).edges.size();
}

bool EncounterGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_agents_ || j >= n_agents_) return false;
  if (std::holds_alternative<CompleteTopology>(topology_)) return true;
  if (const auto* c = std::get_if<CircleExcludingComparison>(&topology_))
    return circle_distance(i, j, n_agents_) > c->comparison_radius;
  const auto& adj = adjacency_[i];
  return std::find(adj.begin(), adj.end(), j) != adj.end();
}

std::size_t EncounterGraph::comparison_radius() const {
  if (const auto* c = std::get_if<CircleExcludingComparison>(&topology_)) return c->comparison_radius;
  return 1;
}

std::pair<std::size_t, std::size_t> EncounterGraph::draw_edge(Rng& rng) const {
  const std::size_t n = n_agents_;
  if (const auto* ex = std::get_if<ExplicitEdges>(&topology_)) {
    const Edge& e = ex->edges[edge_pick_(rng)];
    return {e.a, e.b};
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t i = pick(rng);
  if (std::holds_alternative<CompleteTopology>(topology_)) {
    std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
    if (j >= i) ++j;
    return {i, j};
  }
  const std::size_t r = std::get<CircleExcludingComparison>(topology_).comparison_radius;
  for (;;) {
    const std::size_t j = pick(rng);
    if (circle_distance(i, j, n) > r) return {i, j};
  }
}

std::vector<std::size_t> EncounterGraph::neighbours(std::size_t i) const {
  if (!adjacency_.empty()) return adjacency_[i];
  std::vector<std::size_t> out;
  out.reserve(n_agents_);
  for (std::size_t j = 0; j < n_agents_; ++j)
    if (has_edge(i, j)) out.push_back(j);
  return out;
}

EncounterGraph build_encounter_graph(const Topology& topology, std::size_t n_agents) {
  if (n_agents < 2) throw ConfigError("encounter graph needs at least 2 agents");
  if (const auto* ex = std::get_if<ExplicitEdges>(&topology)) {
    if (ex->edges.empty()) throw ConfigError("explicit encounter graph has no edges");
    for (const Edge& e : ex->edges) {
      std::ostringstream s;
      if (e.a >= n_agents || e.b >= n_agents) {
        s << "edge (" << e.a << "," << e.b << ") refers to an agent outside 0.." << n_agents - 1;
        throw ConfigError(s.str());
      }
      if (e.a == e.b) {
        s << "self-loop on agent " << e.a << " is not allowed";
        throw ConfigError(s.str());
      }
      if (!(e.rate > 0.0)) {
        s << "edge (" << e.a << "," << e.b << ") must have a positive rate";
        throw ConfigError(s.str());
      }
    }
  }
  EncounterGraph g(topology, n_agents);
  if (const auto* c = std::get_if<CircleExcludingComparison>(&topology)) {
    if (c->comparison_radius == 0)
      throw ConfigError("circle topology needs comparison_radius >= 1");
  }
  const bool ok = std::holds_alternative<CompleteTopology>(topology) ||
                  connected(n_agents, [&](std::size_t i) { return g.neighbours(i); });
  if (!ok) {
    throw ConfigError(
        "encounter graph is disconnected: every pair of agents must be joined by a path of "
        "positive-rate encounters");
  }
  return g;
}

}  // namespace econcal
