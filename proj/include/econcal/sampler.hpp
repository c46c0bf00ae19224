#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>

#include "econcal/holdings.hpp"
#include "econcal/rng.hpp"
#include "econcal/utility.hpp"

namespace econcal {

enum class PriceBandMode : std::uint8_t {
  /// Draw the outcome from the gate-free utility product; the trade is
  /// called off when either agent refuses the implied price.
  RejectTrade,
  /// Draw from the utility product restricted to acceptable prices.
  Conditional,
};

struct SamplerPolicy {
  int max_tries = 200;
  int metropolis_steps = 50;
  int probes_per_axis = 16;
  double envelope_safety = 2.0;
  /// Relative margin removed from every side of the outcome box.
  double boundary_shave = 1e-6;
  double min_price_step = 1e-12;
  /// Split the outcome into independent commodity blocks and use exact Beta
  /// draws for power-law blocks. When false, the whole outcome box is sampled
  /// jointly by rejection.
  bool exploit_structure = true;
  PriceBandMode band_mode = PriceBandMode::RejectTrade;
  /// When false, price bands are ignored and every outcome is accepted.
  bool apply_price_gates = true;
};

struct SamplerStats {
  std::uint64_t outcomes = 0;
  std::uint64_t no_trades = 0;
  std::uint64_t band_refusals = 0;
  std::uint64_t metropolis_fallbacks = 0;
  std::uint64_t metropolis_stalls = 0;
  std::uint64_t envelope_violations = 0;

  SamplerStats& operator+=(const SamplerStats& o);
};

/// Split `total` as total*t, total*(1-t) with t ~ Beta(eta_i, eta_j).
std::pair<double, double> sample_cd_split(double eta_i, double eta_j, double total, Rng& rng);

struct Outcome {
  Holdings i;
  Holdings j;
};

/// Draw new holdings for agents i and j with density proportional to the
/// product of their utilities over the pooled box, conserving each commodity.
/// nullopt means NoTrade: both agents keep what they hold.
std::optional<Outcome> sample_outcome(const AgentDensity& di, const AgentDensity& dj,
                                      const Holdings& current_i, const Holdings& current_j,
                                      std::size_t goods_count, Rng& rng,
                                      const SamplerPolicy& policy, SamplerStats& stats);

/// Spec-level entry point: `pooled` must equal the sum of the two contexts'
/// current holdings.
std::optional<Outcome> sample_outcome_general(const UtilitySpec& spec_i, const UtilitySpec& spec_j,
                                              const Holdings& pooled, std::size_t goods_count,
                                              const EncounterContext& context_i,
                                              const EncounterContext& context_j, Rng& rng,
                                              const SamplerPolicy& policy = {},
                                              SamplerStats* stats = nullptr);

}  // namespace econcal
