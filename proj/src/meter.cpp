#include "econcal/meter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

double relative_gap(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

bool halves_disagree(const std::vector<double>& series, std::size_t n_batches) {
  const std::size_t half = series.size() / 2;
  if (half < 2) return false;
  const std::vector<double> first(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<double> second(series.end() - static_cast<std::ptrdiff_t>(half), series.end());
  const std::size_t b = std::max<std::size_t>(2, n_batches / 2);
  const BatchMeans a = batch_means(first, b);
  const BatchMeans c = batch_means(second, b);
  const double pooled = std::sqrt(a.standard_error * a.standard_error + c.standard_error * c.standard_error);
  return std::abs(a.mean - c.mean) > 5.0 * pooled;
}

}  // namespace

void MeterSpec::validate() const {
  std::vector<std::string> v;
  if (n_agents < 2) v.push_back("meter.n_agents must be at least 2");
  if (!(eta > 0.0)) v.push_back("meter.eta must be positive");
  if (alphas.empty() || alphas.size() > kMaxGoods) v.push_back("meter.alphas must have 1 or 2 entries");
  for (double a : alphas)
    if (!(a > 0.0)) v.push_back("meter.alphas must be positive");
  if (initial_per_agent) {
    const Holdings& h = *initial_per_agent;
    bool ok = h.money > 0.0;
    for (std::size_t j = 0; j < alphas.size() && j < kMaxGoods; ++j) ok = ok && h.goods[j] > 0.0;
    if (!ok) v.push_back("meter.initial holdings must be positive");
  }
  if (v.empty()) return;
  std::string msg = "invalid meter spec:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

void MeasurementProtocol::validate() const {
  std::vector<std::string> v;
  if (burn_in_sweeps == 0) v.push_back("protocol.burn_in_sweeps must be positive");
  if (n_samples == 0) v.push_back("protocol.n_samples must be positive");
  if (sample_stride_sweeps == 0) v.push_back("protocol.sample_stride_sweeps must be positive");
  if (!(cross_rate > 0.0 && cross_rate < 1.0)) v.push_back("protocol.cross_rate must lie in (0, 1)");
  if (n_batches < 2) v.push_back("protocol.n_batches must be at least 2");
  if (n_samples < n_batches) v.push_back("protocol.n_samples must be at least n_batches");
  if (v.empty()) return;
  std::string msg = "invalid measurement protocol:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

CoupledSystem::CoupledSystem(Economy economy, Economy meter)
    : economy_(std::move(economy)), meter_(std::move(meter)), reference_(economy_.totals()) {}

double CoupledSystem::meter_eta() const { return money_exponent(meter_.spec(0)); }

double CoupledSystem::meter_alpha(std::size_t j) const {
  return std::get<CobbDouglas>(meter_.spec(0)).alphas.at(j);
}

double CoupledSystem::instant_beta() const {
  const double m_bar = meter_.totals().money / static_cast<double>(meter_.size());
  return meter_eta() / m_bar;
}

double CoupledSystem::instant_nu(std::size_t j) const {
  const double g_bar = meter_.totals().goods[j] / static_cast<double>(meter_.size());
  return meter_alpha(j) / g_bar;
}

CoupledSystem attach_meter(Economy economy, const MeterSpec& spec) {
  spec.validate();
  if (spec.alphas.size() != economy.goods_count()) {
    std::ostringstream s;
    s << "meter trades " << spec.alphas.size() << " goods but the economy has "
      << economy.goods_count();
    throw ConfigError(s.str());
  }
  Holdings each;
  if (spec.initial_per_agent) {
    each = *spec.initial_per_agent;
  } else {
    const double n = static_cast<double>(economy.size());
    each.money = economy.totals().money / n;
    for (std::size_t j = 0; j < economy.goods_count(); ++j) each.goods[j] = economy.totals().goods[j] / n;
  }
  for (std::size_t j = economy.goods_count(); j < kMaxGoods; ++j) each.goods[j] = 0.0;
  std::vector<UtilitySpec> specs(spec.n_agents, CobbDouglas{spec.eta, spec.alphas});
  Economy meter(std::move(specs), std::vector<Holdings>(spec.n_agents, each),
                build_encounter_graph(CompleteTopology{}, spec.n_agents), economy.goods_count());
  return CoupledSystem(std::move(economy), std::move(meter));
}

Economy detach_meter(CoupledSystem&& coupled) { return std::move(coupled.economy()); }

void reserve_offset(CoupledSystem& coupled, const Holdings& flow_out, Rng& rng) {
  Economy& e = coupled.economy();
  const std::size_t n = e.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t c = 0; c < commodity_count(e.goods_count()); ++c) {
    const double delta = flow_out[c];
    if (delta == 0.0) continue;
    if (delta > 0.0) {
      e.holdings_mut(pick(rng))[c] += delta;
      continue;
    }
    const double need = -delta;
    bool done = false;
    for (std::size_t t = 0; t < n && !done; ++t) {
      Holdings& h = e.holdings_mut(pick(rng));
      if (h[c] >= need) {
        h[c] -= need;
        done = true;
      }
    }
    if (done) continue;
    double available = 0.0;
    for (std::size_t k = 0; k < n; ++k) available += e.holdings(k)[c];
    if (available < need)
      throw NumericalError("reserve_offset: economy holdings cannot absorb the debit");
    for (std::size_t k = 0; k < n; ++k) {
      Holdings& h = e.holdings_mut(k);
      h[c] = std::max(0.0, h[c] - need * (h[c] / available));
    }
  }
}

void coupled_step(CoupledSystem& coupled, double cross_rate, Rng& rng, const SamplerPolicy& policy,
                  bool gate_cross_trades) {
  Economy& e = coupled.economy();
  Economy& m = coupled.meter();
  const std::size_t gc = e.goods_count();
  SamplerStats& stats = coupled.stats();
  const double u = uniform01(rng);
  if (u < cross_rate) {
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng);
    const std::size_t b = std::uniform_int_distribution<std::size_t>(0, e.size() - 1)(rng);
    const EncounterContext ca = m.context(a);
    const EncounterContext cb = e.context(b);
    const Holdings before = e.holdings(b);
    const Holdings meter_before = m.holdings(a);
    SamplerPolicy cross = policy;
    cross.apply_price_gates = policy.apply_price_gates && gate_cross_trades;
    if (exchange(m.spec(a), m.holdings_mut(a), ca, e.spec(b), e.holdings_mut(b), cb, gc, rng, cross,
                 stats)) {
      const Holdings flow = before - e.holdings(b);
      reserve_offset(coupled, flow, rng);
      m.shift_totals(m.holdings(a) - meter_before);
    }
    return;
  }
  const double ne = static_cast<double>(e.size());
  const double nm = static_cast<double>(m.size());
  Economy& side = (u - cross_rate) < (1.0 - cross_rate) * ne / (ne + nm) ? e : m;
  const auto [i, j] = side.graph().draw_edge(rng);
  const EncounterContext ci = side.context(i);
  const EncounterContext cj = side.context(j);
  exchange(side.spec(i), side.holdings_mut(i), ci, side.spec(j), side.holdings_mut(j), cj, gc, rng,
           policy, stats);
}

MeterReading measure_values(CoupledSystem& coupled, const MeasurementProtocol& protocol, Rng& rng,
                            const SamplerPolicy& policy) {
  protocol.validate();
  const std::size_t gc = coupled.goods_count();
  const std::uint64_t sweep_len = coupled.agent_count();
  std::uint64_t steps = 0;
  auto advance = [&](std::uint64_t n) {
    for (std::uint64_t s = 0; s < n; ++s) {
      coupled_step(coupled, protocol.cross_rate, rng, policy, protocol.meter_price_gates);
      if (++steps % kTotalsRefreshInterval == 0) {
        coupled.meter().recompute_totals();
      }
    }
    coupled.meter().recompute_totals();
  };

  advance(protocol.burn_in_sweeps * sweep_len);

  const Totals& ref = coupled.economy_reference();
  std::vector<double> betas;
  std::vector<std::vector<double>> nus(gc);
  betas.reserve(protocol.n_samples);
  MeterReading r;
  for (std::size_t s = 0; s < protocol.n_samples; ++s) {
    advance(protocol.sample_stride_sweeps * sweep_len);
    betas.push_back(coupled.instant_beta());
    for (std::size_t j = 0; j < gc; ++j) nus[j].push_back(coupled.instant_nu(j));
    const Totals now = coupled.economy().sum_holdings();
    for (std::size_t c = 0; c < commodity_count(gc); ++c)
      r.max_total_drift = std::max(r.max_total_drift, relative_gap(now[c], ref[c]));
  }

  const BatchMeans b = batch_means(betas, protocol.n_batches);
  r.beta = b.mean;
  r.se_beta = b.standard_error;
  r.flagged = halves_disagree(betas, protocol.n_batches);
  for (std::size_t j = 0; j < gc; ++j) {
    const BatchMeans v = batch_means(nus[j], protocol.n_batches);
    r.nu.push_back(v.mean);
    r.se_nu.push_back(v.standard_error);
    r.flagged = r.flagged || halves_disagree(nus[j], protocol.n_batches);
  }
  r.macro_state = ref;
  r.n_samples = protocol.n_samples;
  coupled.economy().recompute_totals();
  return r;
}

BatchMeans batch_means(const std::vector<double>& series, std::size_t n_batches) {
  BatchMeans out;
  const std::size_t n = series.size();
  if (n == 0) return out;
  out.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  const std::size_t b = std::min(n_batches, n);
  if (b < 2) return out;
  const std::size_t size = n / b;
  std::vector<double> means;
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * size;
    const std::size_t hi = k + 1 == b ? n : lo + size;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += series[i];
    means.push_back(s / static_cast<double>(hi - lo));
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  out.standard_error = std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
  return out;
}

}  // namespace econcal
