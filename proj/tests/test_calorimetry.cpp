#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "econcal/calorimetry.hpp"
#include "econcal/errors.hpp"

using namespace econcal;

namespace {

MeterReading reading(double m, double g1, double beta, double nu1) {
  MeterReading r;
  r.macro_state.money = m;
  r.macro_state.goods = {g1, 0.0};
  r.beta = beta;
  r.nu = {nu1};
  r.se_beta = 0.0;
  r.se_nu = {0.0};
  return r;
}

MacroGrid square_grid(std::size_t n) {
  MacroGrid g;
  g.money = {1000.0};
  g.goods1 = linspace(500.0, 2000.0, n);
  g.goods2 = linspace(500.0, 2000.0, n);
  return g;
}

using Surface = std::function<double(const Totals&)>;
using Gradient = std::function<std::array<double, 3>(const Totals&)>;

// Readings carrying the exact gradient of a surface, optionally with iid
// relative noise and a matching standard error.
ReadingField field_from(const MacroGrid& grid, const Gradient& grad, double noise = 0.0,
                        std::uint64_t seed = 0) {
  ReadingField f;
  f.grid = grid;
  Rng rng(seed);
  std::normal_distribution<double> n01;
  const std::size_t gc = grid.goods_count();
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    MeterReading r;
    r.macro_state = grid.totals_at(k);
    const auto g = grad(r.macro_state);
    r.beta = g[0] * (1.0 + noise * n01(rng));
    r.se_beta = noise * std::abs(g[0]);
    for (std::size_t j = 0; j < gc; ++j) {
      r.nu.push_back(g[j + 1] * (1.0 + noise * n01(rng)));
      r.se_nu.push_back(noise * std::abs(g[j + 1]));
    }
    f.readings.push_back(r);
  }
  return f;
}

std::vector<double> sample(const MacroGrid& grid, const Surface& s) {
  std::vector<double> out;
  for (std::size_t k = 0; k < grid.node_count(); ++k) out.push_back(s(grid.totals_at(k)));
  return out;
}

}  // namespace

TEST_CASE("grid indexing round-trips") {
  MacroGrid g;
  g.money = {1.0, 2.0, 3.0};
  g.goods1 = {1.0, 2.0};
  g.goods2 = {5.0, 6.0, 7.0, 8.0};
  CHECK(g.node_count() == 24);
  for (std::size_t k = 0; k < 24; ++k) CHECK(g.flat_index(g.node_index(k)) == k);
  const Totals t = g.totals_at(g.flat_index({2, 1, 3}));
  CHECK(t.money == 3.0);
  CHECK(t.goods[0] == 2.0);
  CHECK(t.goods[1] == 8.0);
  CHECK(grid_edges(g).size() == 2 * 2 * 4 + 3 * 1 * 4 + 3 * 2 * 3);
  g.goods1 = {2.0, 1.0};
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("edge increments") {
  const MeterReading a = reading(1000, 500, 3.0, 1.0);
  const MeterReading b = reading(1100, 500, 3.2, 1.0);
  CHECK(edge_increment(a, b) == doctest::Approx(310.0));
  CHECK(edge_increment(a, b, IncrementRule::OneSided) == doctest::Approx(300.0));
  CHECK(edge_increment(b, a) == doctest::Approx(-310.0));
  CHECK(edge_increment(a, a) == 0.0);
  CHECK_THROWS_AS(edge_increment(a, reading(1100, 600, 3.0, 1.0)), UsageError);
}

TEST_CASE("exact gradients of a quadratic surface fit to rounding") {
  // The trapezoid rule is exact when the gradient is linear.
  const MacroGrid grid = square_grid(6);
  const Surface s = [](const Totals& t) {
    return 2.0 * t.goods[0] + 3.0 * t.goods[1] - 1e-3 * (t.goods[0] * t.goods[0] + t.goods[1] * t.goods[1]);
  };
  const Gradient g = [](const Totals& t) {
    return std::array<double, 3>{1.0, 2.0 - 2e-3 * t.goods[0], 3.0 - 2e-3 * t.goods[1]};
  };
  const EntropyField f = fit_entropy(field_from(grid, g));
  CHECK(f.goodness_of_fit < 1e-12);
  const auto truth = sample(grid, s);
  for (std::size_t k = 0; k < truth.size(); ++k)
    CHECK(f.fitted_S[k] == doctest::Approx(truth[k] - truth[0]).epsilon(1e-9));
  CHECK(goodness_of_agreement(f.fitted_S, truth) < 1e-20);
}

TEST_CASE("noisy gradients still fit well") {
  const MacroGrid grid = square_grid(8);
  const Gradient g = [](const Totals& t) {
    return std::array<double, 3>{3.0 / t.money * 1000.0, 3000.0 / t.goods[0], 3000.0 / t.goods[1]};
  };
  const EntropyField f = fit_entropy(field_from(grid, g, 1e-2, 41));
  CHECK(f.goodness_of_fit < 1e-2);
  CHECK(f.goodness_of_fit > 0.0);
}

TEST_CASE("the reference gauge only shifts the fitted surface") {
  const MacroGrid grid = square_grid(5);
  const Gradient g = [](const Totals& t) {
    return std::array<double, 3>{1.0, 3000.0 / t.goods[0], 2000.0 / t.goods[1]};
  };
  ReadingField a = field_from(grid, g, 1e-2, 42);
  ReadingField b = a;
  b.grid.reference_node = {0, 3, 2};
  b.grid.reference_entropy = 17.5;
  const EntropyField fa = fit_entropy(a);
  const EntropyField fb = fit_entropy(b);
  CHECK(fb.fitted_S[b.grid.reference_flat()] == doctest::Approx(17.5));
  const double shift = fb.fitted_S[0] - fa.fitted_S[0];
  for (std::size_t k = 0; k < fa.fitted_S.size(); ++k)
    CHECK(fb.fitted_S[k] - fa.fitted_S[k] == doctest::Approx(shift).epsilon(1e-9));
  CHECK(fa.goodness_of_fit == doctest::Approx(fb.goodness_of_fit).epsilon(1e-9));
}

TEST_CASE("a disconnected edge set cannot be fitted") {
  const std::vector<GraphEdge> edges{{0, 1, 1.0}, {2, 3, 1.0}};
  CHECK_THROWS_AS(fit_potential(4, edges, 0, 0.0), NumericalError);
  const std::vector<GraphEdge> loop{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 2.0}};
  const PotentialFit fit = fit_potential(3, loop, 1, 5.0);
  CHECK(fit.potential[0] == doctest::Approx(4.0));
  CHECK(fit.potential[2] == doctest::Approx(6.0));
  CHECK(fit.rss < 1e-20);
}

TEST_CASE("inconsistent increments around a loop leave a residual") {
  const std::vector<GraphEdge> loop{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 3.0}};
  const PotentialFit fit = fit_potential(3, loop, 0, 0.0);
  // Least squares spreads the loop mismatch of 1 evenly over three edges.
  CHECK(fit.rss == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("concavity") {
  const MacroGrid grid = square_grid(6);
  const auto cd = sample(grid, [](const Totals& t) { return 3000.0 * (std::log(t.goods[0]) + std::log(t.goods[1])); });
  const auto convex = sample(grid, [](const Totals& t) { return 1e-3 * t.goods[0] * t.goods[0]; });
  const auto affine = sample(grid, [](const Totals& t) { return 2.0 * t.goods[0] - t.goods[1] + 5.0; });
  const ConcavityReport r = concavity_check(grid, cd, 1e-9);
  CHECK(r.pass);
  CHECK(r.interior_nodes == 16);
  CHECK(r.worst_eigenvalue < 0.0);
  CHECK_FALSE(concavity_check(grid, convex, 1e-9).pass);
  CHECK(concavity_check(grid, affine, 1e-9).pass);
}

TEST_CASE("concavity on a one-value axis only tests the others") {
  MacroGrid grid;
  grid.money = {1000.0};
  grid.goods1 = linspace(500.0, 2000.0, 4);
  const auto s = sample(grid, [](const Totals& t) { return std::log(t.goods[0]); });
  CHECK(concavity_check(grid, s, 1e-12).pass);
}

TEST_CASE("noise-scaled concavity tolerance") {
  const MacroGrid grid = square_grid(6);
  const Gradient g = [](const Totals& t) {
    return std::array<double, 3>{1.0, 3000.0 / t.goods[0], 3000.0 / t.goods[1]};
  };
  const EntropyField exact = fit_entropy(field_from(grid, g));
  CHECK(hessian_noise_scale(exact) == 0.0);
  const EntropyField noisy = fit_entropy(field_from(grid, g, 1e-2, 43));
  const ConcavityReport r = concavity_check(noisy);
  CHECK(r.tolerance == doctest::Approx(3.0 * hessian_noise_scale(noisy)));
  CHECK(r.pass);
}

TEST_CASE("agreement") {
  const std::vector<double> s{1.0, 4.0, 2.0, 8.0};
  CHECK(goodness_of_agreement(s, s) == 0.0);
  std::vector<double> shifted = s;
  for (double& x : shifted) x += 123.0;
  CHECK(goodness_of_agreement(shifted, s) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(goodness_of_agreement({0, 0, 0, 0}, s) == doctest::Approx(1.0));
  CHECK_THROWS_AS(goodness_of_agreement(s, {2.0, 2.0, 2.0, 2.0}), DomainError);
}

TEST_CASE("pure money readings") {
  const MacroGrid grid = square_grid(4);
  const Gradient pure = [](const Totals& t) {
    return std::array<double, 3>{3000.0 / t.money, 1.0, 1.0};
  };
  MacroGrid line;
  line.money = {500.0, 1000.0, 2000.0};
  line.goods1 = {1000.0};
  line.goods2 = {1000.0};
  const PureMoneyReport r = pure_money_check(field_from(grid, pure, 1e-3, 44), field_from(line, pure, 1e-3, 45));
  CHECK(r.goods_independent());
  CHECK(r.money_value_exponent == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(r.max_rel_beta_variation < 0.01);

  const Gradient tied = [](const Totals& t) {
    return std::array<double, 3>{3000.0 / t.money * t.goods[0] / 1000.0, 1.0, 1.0};
  };
  const PureMoneyReport bad = pure_money_check(field_from(grid, tied, 1e-3, 46), field_from(line, tied, 1e-3, 47));
  CHECK_FALSE(bad.goods_independent());
  CHECK(bad.goods_slopes[0] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("parallel_for runs every index and rethrows the lowest failure") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) CHECK(h == 1);
  try {
    parallel_for(10, 3, [](std::size_t k) {
      if (k == 7 || k == 4) throw NumericalError("node " + std::to_string(k));
    });
    FAIL("expected an exception");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()) == "node 4");
  }
}

TEST_CASE("grid sweep is invariant to the number of workers") {
  MacroGrid grid;
  grid.money = {40.0, 60.0};
  grid.goods1 = {40.0, 60.0};
  grid.goods2 = {50.0};
  const EconomyFactory factory = [](const Totals& t) {
    return make_economy(std::vector<UtilitySpec>(40, CobbDouglas{3.0, {3.0, 3.0}}), CompleteTopology{}, t, 2);
  };
  MeterSpec meter;
  meter.n_agents = 20;
  MeasurementProtocol p;
  p.burn_in_sweeps = 10;
  p.n_samples = 20;
  p.sample_stride_sweeps = 1;
  p.n_batches = 10;
  const ReadingField one = grid_sweep(factory, grid, meter, p, 7, 1);
  const ReadingField many = grid_sweep(factory, grid, meter, p, 7, 8);
  REQUIRE(one.readings.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(one.readings[k].beta == many.readings[k].beta);
    CHECK(one.readings[k].nu == many.readings[k].nu);
    CHECK(one.readings[k].se_beta == many.readings[k].se_beta);
  }
  const ReadingField other = grid_sweep(factory, grid, meter, p, 8, 1);
  CHECK(other.readings[0].beta != one.readings[0].beta);
}
