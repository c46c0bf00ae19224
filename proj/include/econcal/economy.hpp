#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "econcal/graph.hpp"
#include "econcal/holdings.hpp"
#include "econcal/rng.hpp"
#include "econcal/sampler.hpp"
#include "econcal/utility.hpp"

namespace econcal {

/// Agents, their holdings and the encounter graph. Cached totals always
/// match the component-wise sum of holdings up to rounding; every mutation
/// path conserves them.
class Economy {
 public:
  Economy(std::vector<UtilitySpec> specs, std::vector<Holdings> holdings, EncounterGraph graph,
          std::size_t goods_count);

  std::size_t size() const { return specs_.size(); }
  std::size_t goods_count() const { return goods_count_; }
  const EncounterGraph& graph() const { return graph_; }
  const UtilitySpec& spec(std::size_t i) const { return specs_[i]; }
  const std::vector<UtilitySpec>& specs() const { return specs_; }
  const Holdings& holdings(std::size_t i) const { return holdings_[i]; }
  const std::vector<Holdings>& all_holdings() const { return holdings_; }

  /// Direct write access for bookkeeping that conserves totals by
  /// construction (paired exchanges, reserve offsets).
  Holdings& holdings_mut(std::size_t i) { return holdings_[i]; }

  const Totals& totals() const { return totals_; }
  Totals sum_holdings() const;
  void recompute_totals() { totals_ = sum_holdings(); }
  /// Records a net inflow that arrived through holdings_mut.
  void shift_totals(const Holdings& delta) { totals_ += delta; }

  /// Mean goods (good 1) over the comparison neighbourhood of agent i.
  double comparison_mean(std::size_t i) const;
  EncounterContext context(std::size_t i) const;

 private:
  std::vector<UtilitySpec> specs_;
  std::vector<Holdings> holdings_;
  EncounterGraph graph_;
  std::size_t goods_count_;
  std::size_t comparison_radius_;
  bool needs_comparison_ = false;
  Totals totals_{};
};

/// Equal split of `totals` over `specs.size()` agents.
Economy make_economy(std::vector<UtilitySpec> specs, const Topology& topology,
                     const Totals& totals, std::size_t goods_count);

/// Exchange between two agents that may live in different economies.
/// Returns true when holdings changed.
bool exchange(const UtilitySpec& spec_a, Holdings& a, const EncounterContext& context_a,
              const UtilitySpec& spec_b, Holdings& b, const EncounterContext& context_b,
              std::size_t goods_count, Rng& rng, const SamplerPolicy& policy, SamplerStats& stats);

/// Encounter along edge (i, j) of the economy's graph. Neighbourhood means
/// are frozen at the start of the encounter.
bool encounter(Economy& economy, std::size_t i, std::size_t j, Rng& rng,
               const SamplerPolicy& policy, SamplerStats& stats);

inline constexpr std::uint64_t kTotalsRefreshInterval = 10'000;

/// `n_encounters` uniformly drawn edges, each processed by `encounter`.
void sweep(Economy& economy, std::uint64_t n_encounters, Rng& rng,
           const SamplerPolicy& policy, SamplerStats& stats);

}  // namespace econcal
