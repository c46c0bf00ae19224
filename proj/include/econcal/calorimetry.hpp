#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "econcal/economy.hpp"
#include "econcal/meter.hpp"

namespace econcal {

/// Rectangular grid of macro-states. Axes are money, good 1 and good 2; an
/// empty goods2 axis means the economy trades a single good.
struct MacroGrid {
  std::vector<double> money;
  std::vector<double> goods1;
  std::vector<double> goods2;
  std::array<std::size_t, 3> reference_node{0, 0, 0};
  double reference_entropy = 0.0;

  std::size_t goods_count() const { return goods2.empty() ? 1 : 2; }
  std::array<std::size_t, 3> shape() const;
  std::size_t node_count() const;
  std::size_t flat_index(const std::array<std::size_t, 3>& idx) const;
  std::array<std::size_t, 3> node_index(std::size_t flat) const;
  Totals totals_at(std::size_t flat) const;
  std::size_t reference_flat() const { return flat_index(reference_node); }

  /// Throws ConfigError when an axis is empty, unsorted or non-positive, or
  /// the reference node is off the grid.
  void validate() const;
};

/// `count` evenly spaced values from `lo` to `hi` inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct ReadingField {
  MacroGrid grid;
  std::vector<MeterReading> readings;
  SamplerStats stats;

  std::size_t flagged_count() const;
};

/// Builds a fresh economy holding the given totals.
using EconomyFactory = std::function<Economy(const Totals&)>;

/// One independent measurement per node on `parallelism` worker threads.
/// Node k draws from derive_stream(seed, k), so the field does not depend
/// on the number of workers.
ReadingField grid_sweep(const EconomyFactory& factory, const MacroGrid& grid,
                        const MeterSpec& meter, const MeasurementProtocol& protocol,
                        std::uint64_t seed, std::size_t parallelism,
                        const SamplerPolicy& policy = {});

/// Runs `task(k)` for k in [0, n) on up to `parallelism` threads. The first
/// exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t parallelism,
                  const std::function<void(std::size_t)>& task);

enum class IncrementRule : std::uint8_t { Trapezoid, OneSided };

/// Entropy change from a to b for readings at grid-adjacent macro-states.
/// Throws UsageError when the states differ in more than one commodity.
double edge_increment(const MeterReading& a, const MeterReading& b,
                      IncrementRule rule = IncrementRule::Trapezoid);

struct GraphEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double increment = 0.0;
};

struct PotentialFit {
  std::vector<double> potential;
  double rss = 0.0;
  double tss = 0.0;
};

/// Least-squares potential with potential[reference] = reference_value that
/// best explains the edge increments. Throws NumericalError when the edge
/// graph is disconnected or the solve misses a 1e-10 relative residual.
PotentialFit fit_potential(std::size_t n_nodes, const std::vector<GraphEdge>& edges,
                           std::size_t reference, double reference_value);

/// Edges joining nodes one step apart along an axis, oriented low to high.
std::vector<std::pair<std::size_t, std::size_t>> grid_edges(const MacroGrid& grid);

struct EntropyField {
  MacroGrid grid;
  std::vector<MeterReading> readings;
  std::vector<double> fitted_S;
  double rss = 0.0;
  double tss = 0.0;
  double goodness_of_fit = 0.0;
  std::size_t flagged = 0;
};

EntropyField fit_entropy(const ReadingField& field, IncrementRule rule = IncrementRule::Trapezoid);

/// Mean-shifted squared misfit normalized by the oracle's variance over the
/// nodes. Throws DomainError when the oracle is constant.
double goodness_of_agreement(const std::vector<double>& fitted, const std::vector<double>& oracle);

struct ConcavityReport {
  bool pass = true;
  double worst_eigenvalue = 0.0;
  std::size_t worst_node = 0;
  std::size_t interior_nodes = 0;
  double tolerance = 0.0;
};

/// Largest eigenvalue of the discrete Hessian over interior nodes. Axes with
/// fewer than three values are not tested. No interior node means pass.
ConcavityReport concavity_check(const MacroGrid& grid, const std::vector<double>& S,
                                double tolerance);

/// Tolerance is three times the Hessian noise implied by the reading SEs.
ConcavityReport concavity_check(const EntropyField& field);
double hessian_noise_scale(const EntropyField& field);

struct PureMoneyReport {
  /// Largest |beta - mean| / mean over the goods grid.
  double max_rel_beta_variation = 0.0;
  /// Largest |beta - mean| / se_beta over the goods grid.
  double max_beta_z = 0.0;
  /// Weighted slopes of log beta on log G_j across the goods grid.
  std::vector<double> goods_slopes;
  std::vector<double> goods_slope_se;
  /// Slope of log beta on log M along the money line, expected -1.
  double money_value_exponent = 0.0;
  double money_value_exponent_se = 0.0;

  /// Every goods slope lies within three standard errors of zero.
  bool goods_independent() const;
};

/// `goods_grid` holds readings at fixed money; `money_line` at fixed goods.
PureMoneyReport pure_money_check(const ReadingField& goods_grid, const ReadingField& money_line);

}  // namespace econcal
