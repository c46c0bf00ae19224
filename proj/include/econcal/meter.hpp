#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "econcal/economy.hpp"
#include "econcal/holdings.hpp"
#include "econcal/rng.hpp"
#include "econcal/sampler.hpp"

namespace econcal {

/// Cobb-Douglas economy used as the measuring instrument.
struct MeterSpec {
  std::size_t n_agents = 100;
  double eta = 2.0;
  std::vector<double> alphas{2.0, 2.0};
  /// Starting holdings per meter agent; the economy's per-agent means when unset.
  std::optional<Holdings> initial_per_agent;

  void validate() const;
};

struct MeasurementProtocol {
  std::size_t burn_in_sweeps = 500;
  std::size_t n_samples = 200;
  std::size_t sample_stride_sweeps = 5;
  /// Fraction of encounters that pair a meter agent with an economy agent.
  double cross_rate = 0.2;
  std::size_t n_batches = 10;
  /// Whether price bands also gate meter-economy trades. Gated agents conserve
  /// their value m + g at prices near one, so a gated meter cannot exchange
  /// money with a band economy and stays at its starting reading.
  bool meter_price_gates = false;

  void validate() const;
};

struct MeterReading {
  double beta = 0.0;
  std::vector<double> nu;
  double se_beta = 0.0;
  std::vector<double> se_nu;
  Totals macro_state{};
  std::size_t n_samples = 0;
  /// First and second half of the samples disagree by more than 5 pooled SE.
  bool flagged = false;
  /// Largest relative deviation of the economy totals from their initial
  /// values seen at a sample instant.
  double max_total_drift = 0.0;

  double temperature() const { return 1.0 / beta; }
  double price(std::size_t j) const { return nu.at(j) / beta; }
};

/// Economy under test plus an attached meter. Net flows between the two are
/// replaced from an external reserve so the economy's totals never change.
class CoupledSystem {
 public:
  CoupledSystem(Economy economy, Economy meter);

  Economy& economy() { return economy_; }
  const Economy& economy() const { return economy_; }
  Economy& meter() { return meter_; }
  const Economy& meter() const { return meter_; }
  const Totals& economy_reference() const { return reference_; }
  double meter_eta() const;
  double meter_alpha(std::size_t j) const;
  std::size_t goods_count() const { return economy_.goods_count(); }
  std::size_t agent_count() const { return economy_.size() + meter_.size(); }

  /// Current meter estimates: eta / m_bar and alpha_j / g_bar_j.
  double instant_beta() const;
  double instant_nu(std::size_t j) const;

  SamplerStats& stats() { return stats_; }
  const SamplerStats& stats() const { return stats_; }

 private:
  Economy economy_;
  Economy meter_;
  Totals reference_;
  SamplerStats stats_;
};

/// Throws ConfigError when the meter trades a different number of goods.
CoupledSystem attach_meter(Economy economy, const MeterSpec& spec);
Economy detach_meter(CoupledSystem&& coupled);

/// Credit (positive flow) or debit (negative flow) the amounts that left the
/// economy back to uniformly drawn economy agents.
void reserve_offset(CoupledSystem& coupled, const Holdings& flow_out, Rng& rng);

/// One encounter of the coupled system. Meter-economy trades ignore price
/// bands unless gate_cross_trades is set.
void coupled_step(CoupledSystem& coupled, double cross_rate, Rng& rng, const SamplerPolicy& policy,
                  bool gate_cross_trades = false);

MeterReading measure_values(CoupledSystem& coupled, const MeasurementProtocol& protocol, Rng& rng,
                            const SamplerPolicy& policy = {});

struct BatchMeans {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Mean and batch-means standard error of a correlated series.
BatchMeans batch_means(const std::vector<double>& series, std::size_t n_batches);

}  // namespace econcal
