#include "econcal/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

template <std::size_t D>
using Point = std::array<double, D>;

struct AlwaysOpen {
  template <class P>
  bool operator()(const P&) const {
    return true;
  }
};

inline double clean(double v) { return std::isfinite(v) && v > 0.0 ? v : 0.0; }

// Rejection sampling on the (shaved) box [0, extent] with an envelope taken
// from a probe lattice; falls back to an independence Metropolis chain when the
// envelope cannot be formed or the rejection budget runs out.
template <std::size_t D, class Density, class Gate>
std::optional<Point<D>> sample_box(const Density& density, const Gate& gate,
                                   const Point<D>& extent, const Point<D>& start, Rng& rng,
                                   const SamplerPolicy& policy, SamplerStats& stats) {
  Point<D> lo{}, width{};
  for (std::size_t d = 0; d < D; ++d) {
    lo[d] = policy.boundary_shave * extent[d];
    width[d] = extent[d] - 2.0 * lo[d];
  }
  auto propose = [&] {
    Point<D> x;
    for (std::size_t d = 0; d < D; ++d) x[d] = lo[d] + width[d] * uniform01(rng);
    return x;
  };

  const int probes = std::max(2, policy.probes_per_axis);
  std::size_t lattice_size = 1;
  for (std::size_t d = 0; d < D; ++d) lattice_size *= static_cast<std::size_t>(probes);

  double peak = 0.0;
  bool envelope_ok = true;
  Point<D> best{}, argmax{};
  bool have_best = false;
  for (std::size_t n = 0; n < lattice_size; ++n) {
    Point<D> x;
    std::size_t rest = n;
    for (std::size_t d = 0; d < D; ++d) {
      const auto k = static_cast<double>(rest % static_cast<std::size_t>(probes));
      rest /= static_cast<std::size_t>(probes);
      x[d] = lo[d] + width[d] * k / static_cast<double>(probes - 1);
    }
    const double f = density(x);
    if (!std::isfinite(f)) {
      envelope_ok = false;
      continue;
    }
    if (f > peak) {
      peak = f;
      argmax = x;
      if (gate(x)) {
        best = x;
        have_best = true;
      }
    }
  }
  envelope_ok = envelope_ok && peak > 0.0;

  // Second lattice spanning one coarse cell either side of the coarse maximum.
  if (envelope_ok) {
    Point<D> rlo{}, rwidth{};
    for (std::size_t d = 0; d < D; ++d) {
      const double cell = width[d] / static_cast<double>(probes - 1);
      rlo[d] = std::max(lo[d], argmax[d] - cell);
      rwidth[d] = std::min(lo[d] + width[d], argmax[d] + cell) - rlo[d];
    }
    for (std::size_t n = 0; n < lattice_size; ++n) {
      Point<D> x;
      std::size_t rest = n;
      for (std::size_t d = 0; d < D; ++d) {
        const auto k = static_cast<double>(rest % static_cast<std::size_t>(probes));
        rest /= static_cast<std::size_t>(probes);
        x[d] = rlo[d] + rwidth[d] * k / static_cast<double>(probes - 1);
      }
      const double f = density(x);
      if (std::isfinite(f) && f > peak) peak = f;
    }
  }
  const double envelope = peak * policy.envelope_safety;

  int gate_misses = 0;
  std::optional<Point<D>> seen;
  if (envelope_ok) {
    for (int t = 0; t < policy.max_tries; ++t) {
      const Point<D> x = propose();
      if (!gate(x)) {
        ++gate_misses;
        continue;
      }
      const double f = clean(density(x));
      if (f <= 0.0) continue;
      if (!seen) seen = x;
      if (f > envelope) ++stats.envelope_violations;
      if (uniform01(rng) * envelope < f) return x;
    }
    if (gate_misses == policy.max_tries) return std::nullopt;
  }

  ++stats.metropolis_fallbacks;
  Point<D> x = start;
  double fx = gate(x) ? clean(density(x)) : 0.0;
  if (fx <= 0.0 && seen) {
    x = *seen;
    fx = clean(density(x));
  }
  if (fx <= 0.0 && have_best) {
    x = best;
    fx = clean(density(x));
  }
  if (fx <= 0.0) {
    ++stats.metropolis_stalls;
    return std::nullopt;
  }
  int accepted = 0;
  for (int s = 0; s < policy.metropolis_steps; ++s) {
    const Point<D> y = propose();
    if (!gate(y)) continue;
    const double fy = clean(density(y));
    if (fy <= 0.0) continue;
    if (fy >= fx || uniform01(rng) * fx < fy) {
      x = y;
      fx = fy;
      ++accepted;
    }
  }
  if (accepted == 0) {
    ++stats.metropolis_stalls;
    return std::nullopt;
  }
  return x;
}

// One commodity whose factors for the two agents are independent of the rest.
std::optional<std::pair<double, double>> split_axis(const AxisFactor& fi, const AxisFactor& fj,
                                                    double pool, double current_i, Rng& rng,
                                                    const SamplerPolicy& policy,
                                                    SamplerStats& stats) {
  if (pool <= 0.0) return std::make_pair(0.0, 0.0);
  if (policy.exploit_structure && fi.is_power() && fj.is_power())
    return sample_cd_split(fi.exponent + 1.0, fj.exponent + 1.0, pool, rng);
  auto density = [&](const Point<1>& x) { return fi(x[0]) * fj(pool - x[0]); };
  const auto x = sample_box<1>(density, AlwaysOpen{}, Point<1>{pool},
                               Point<1>{std::clamp(current_i, 0.0, pool)}, rng, policy, stats);
  if (!x) return std::nullopt;
  return std::make_pair((*x)[0], pool - (*x)[0]);
}

Holdings complement(const Holdings& pool, const Holdings& part, std::size_t goods_count) {
  Holdings out;
  out.money = pool.money - part.money;
  for (std::size_t j = 0; j < goods_count; ++j) out.goods[j] = pool.goods[j] - part.goods[j];
  return out;
}

template <std::size_t D>
Holdings to_holdings(const Point<D>& x) {
  Holdings h;
  h.money = x[0];
  for (std::size_t d = 1; d < D; ++d) h.goods[d - 1] = x[d];
  return h;
}

template <std::size_t D>
Point<D> to_point(const Holdings& h) {
  Point<D> x;
  x[0] = h.money;
  for (std::size_t d = 1; d < D; ++d) x[d] = h.goods[d - 1];
  return x;
}

// Whole outcome box at once: money plus every good.
template <std::size_t D>
std::optional<Outcome> sample_joint(const AgentDensity& di, const AgentDensity& dj,
                                    const Holdings& current_i, const Holdings& pool,
                                    std::size_t goods_count, bool gate_inside, Rng& rng,
                                    const SamplerPolicy& policy, SamplerStats& stats) {
  auto density = [&](const Point<D>& x) {
    const Holdings oi = to_holdings<D>(x);
    return di.base(oi, goods_count) * dj.base(complement(pool, oi, goods_count), goods_count);
  };
  auto gate = [&](const Point<D>& x) {
    if (!gate_inside) return true;
    const Holdings oi = to_holdings<D>(x);
    return pair_accepts(di, dj, oi, complement(pool, oi, goods_count), policy.min_price_step);
  };
  const auto x = sample_box<D>(density, gate, to_point<D>(pool), to_point<D>(current_i), rng,
                               policy, stats);
  if (!x) return std::nullopt;
  Outcome out;
  out.i = to_holdings<D>(*x);
  out.j = complement(pool, out.i, goods_count);
  return out;
}

std::optional<Outcome> sample_blocks(const AgentDensity& di, const AgentDensity& dj,
                                     const Holdings& current_i, const Holdings& pool,
                                     std::size_t goods_count, Rng& rng,
                                     const SamplerPolicy& policy, SamplerStats& stats) {
  Outcome out;
  const auto money = split_axis(di.money, dj.money, pool.money, current_i.money, rng, policy, stats);
  if (!money) return std::nullopt;
  out.i.money = money->first;
  out.j.money = money->second;

  if (di.joint != JointGoods::None || dj.joint != JointGoods::None) {
    const Point<2> extent{pool.goods[0], pool.goods[1]};
    auto density = [&](const Point<2>& x) {
      return di.goods_weight(x[0], x[1]) * dj.goods_weight(pool.goods[0] - x[0], pool.goods[1] - x[1]);
    };
    const Point<2> start{std::clamp(current_i.goods[0], 0.0, pool.goods[0]),
                         std::clamp(current_i.goods[1], 0.0, pool.goods[1])};
    const auto x = sample_box<2>(density, AlwaysOpen{}, extent, start, rng, policy, stats);
    if (!x) return std::nullopt;
    for (std::size_t j = 0; j < 2; ++j) {
      out.i.goods[j] = (*x)[j];
      out.j.goods[j] = pool.goods[j] - (*x)[j];
    }
    return out;
  }

  for (std::size_t j = 0; j < goods_count; ++j) {
    const auto g = split_axis(di.goods[j], dj.goods[j], pool.goods[j], current_i.goods[j], rng,
                              policy, stats);
    if (!g) return std::nullopt;
    out.i.goods[j] = g->first;
    out.j.goods[j] = g->second;
  }
  return out;
}

}  // namespace

SamplerStats& SamplerStats::operator+=(const SamplerStats& o) {
  outcomes += o.outcomes;
  no_trades += o.no_trades;
  band_refusals += o.band_refusals;
  metropolis_fallbacks += o.metropolis_fallbacks;
  metropolis_stalls += o.metropolis_stalls;
  envelope_violations += o.envelope_violations;
  return *this;
}

std::pair<double, double> sample_cd_split(double eta_i, double eta_j, double total, Rng& rng) {
  if (!(total > 0.0)) return {0.0, 0.0};
  const double x = std::gamma_distribution<double>(eta_i, 1.0)(rng);
  const double y = std::gamma_distribution<double>(eta_j, 1.0)(rng);
  const double s = x + y;
  const double t = s > 0.0 ? x / s : 0.5;
  const double xi = total * t;
  return {xi, total - xi};
}

std::optional<Outcome> sample_outcome(const AgentDensity& di, const AgentDensity& dj,
                                      const Holdings& current_i, const Holdings& current_j,
                                      std::size_t goods_count, Rng& rng,
                                      const SamplerPolicy& policy, SamplerStats& stats) {
  if (goods_count == 0 || goods_count > kMaxGoods)
    throw UsageError("sample_outcome: goods_count must be 1 or 2");
  const Holdings pool = current_i + current_j;
  const bool gated = policy.apply_price_gates && (di.gate.active || dj.gate.active);
  const bool gate_inside = gated && policy.band_mode == PriceBandMode::Conditional;

  std::optional<Outcome> out;
  if (!policy.exploit_structure || gate_inside) {
    out = goods_count == 1
              ? sample_joint<2>(di, dj, current_i, pool, goods_count, gate_inside, rng, policy, stats)
              : sample_joint<3>(di, dj, current_i, pool, goods_count, gate_inside, rng, policy, stats);
  } else {
    out = sample_blocks(di, dj, current_i, pool, goods_count, rng, policy, stats);
  }

  if (out && gated && !gate_inside && !pair_accepts(di, dj, out->i, out->j, policy.min_price_step)) {
    ++stats.band_refusals;
    out.reset();
  }
  if (out)
    ++stats.outcomes;
  else
    ++stats.no_trades;
  return out;
}

std::optional<Outcome> sample_outcome_general(const UtilitySpec& spec_i, const UtilitySpec& spec_j,
                                              const Holdings& pooled, std::size_t goods_count,
                                              const EncounterContext& context_i,
                                              const EncounterContext& context_j, Rng& rng,
                                              const SamplerPolicy& policy, SamplerStats* stats) {
  const Holdings sum = context_i.current + context_j.current;
  for (std::size_t c = 0; c < commodity_count(goods_count); ++c) {
    if (std::abs(sum[c] - pooled[c]) > 1e-12 * std::max(1.0, std::abs(pooled[c])))
      throw UsageError("sample_outcome_general: pooled must equal the sum of current holdings");
  }
  SamplerStats local;
  const auto out = sample_outcome(make_density(spec_i, context_i), make_density(spec_j, context_j),
                                  context_i.current, context_j.current, goods_count, rng, policy,
                                  stats ? *stats : local);
  return out;
}

}  // namespace econcal
