#include "econcal/economy.hpp"

#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {

Economy::Economy(std::vector<UtilitySpec> specs, std::vector<Holdings> holdings,
                 EncounterGraph graph, std::size_t goods_count)
    : specs_(std::move(specs)),
      holdings_(std::move(holdings)),
      graph_(std::move(graph)),
      goods_count_(goods_count),
      comparison_radius_(graph_.comparison_radius()) {
  if (goods_count_ == 0 || goods_count_ > kMaxGoods)
    throw ConfigError("economy goods_count must be 1 or 2");
  if (specs_.size() != holdings_.size() || specs_.size() != graph_.size())
    throw ConfigError("economy: specs, holdings and graph sizes differ");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    validate(specs_[i]);
    if (goods_count_of(specs_[i]) != goods_count_) {
      std::ostringstream s;
      s << "agent " << i << " (" << family_name(specs_[i]) << ") is defined over "
        << goods_count_of(specs_[i]) << " goods, economy has " << goods_count_;
      throw ConfigError(s.str());
    }
    if (!non_negative(holdings_[i])) throw ConfigError("economy: holdings must be non-negative");
    if (std::holds_alternative<Interdependent>(specs_[i])) needs_comparison_ = true;
  }
  recompute_totals();
}

Totals Economy::sum_holdings() const {
  Totals t;
  for (const Holdings& h : holdings_) t += h;
  return t;
}

double Economy::comparison_mean(std::size_t i) const {
  const std::size_t n = size();
  const std::size_t r = std::min(comparison_radius_, (n - 1) / 2);
  if (r == 0) return holdings_[i].goods[0];
  double s = 0.0;
  for (std::size_t d = 1; d <= r; ++d) {
    s += holdings_[(i + d) % n].goods[0];
    s += holdings_[(i + n - d) % n].goods[0];
  }
  return s / static_cast<double>(2 * r);
}

EncounterContext Economy::context(std::size_t i) const {
  EncounterContext c;
  c.current = holdings_[i];
  if (needs_comparison_) c.comparison_mean = comparison_mean(i);
  return c;
}

Economy make_economy(std::vector<UtilitySpec> specs, const Topology& topology,
                     const Totals& totals, std::size_t goods_count) {
  const std::size_t n = specs.size();
  if (n == 0) throw ConfigError("economy needs at least one agent");
  Holdings each;
  each.money = totals.money / static_cast<double>(n);
  for (std::size_t j = 0; j < goods_count; ++j) each.goods[j] = totals.goods[j] / static_cast<double>(n);
  auto graph = build_encounter_graph(topology, n);
  return Economy(std::move(specs), std::vector<Holdings>(n, each), std::move(graph), goods_count);
}

bool exchange(const UtilitySpec& spec_a, Holdings& a, const EncounterContext& context_a,
              const UtilitySpec& spec_b, Holdings& b, const EncounterContext& context_b,
              std::size_t goods_count, Rng& rng, const SamplerPolicy& policy, SamplerStats& stats) {
  const auto out = sample_outcome(make_density(spec_a, context_a), make_density(spec_b, context_b),
                                  a, b, goods_count, rng, policy, stats);
  if (!out) return false;
  a = out->i;
  b = out->j;
  return true;
}

bool encounter(Economy& economy, std::size_t i, std::size_t j, Rng& rng,
               const SamplerPolicy& policy, SamplerStats& stats) {
  if (!economy.graph().has_edge(i, j)) throw UsageError("encounter: (i, j) is not an edge");
  const EncounterContext ci = economy.context(i);
  const EncounterContext cj = economy.context(j);
  return exchange(economy.spec(i), economy.holdings_mut(i), ci, economy.spec(j),
                  economy.holdings_mut(j), cj, economy.goods_count(), rng, policy, stats);
}

void sweep(Economy& economy, std::uint64_t n_encounters, Rng& rng, const SamplerPolicy& policy,
           SamplerStats& stats) {
  for (std::uint64_t n = 0; n < n_encounters; ++n) {
    const auto [i, j] = economy.graph().draw_edge(rng);
    const EncounterContext ci = economy.context(i);
    const EncounterContext cj = economy.context(j);
    exchange(economy.spec(i), economy.holdings_mut(i), ci, economy.spec(j), economy.holdings_mut(j),
             cj, economy.goods_count(), rng, policy, stats);
    if ((n + 1) % kTotalsRefreshInterval == 0) economy.recompute_totals();
  }
}

}  // namespace econcal
