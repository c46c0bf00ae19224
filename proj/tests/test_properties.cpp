// Randomized property checks. Each property draws its cases from a seeded
// generator, so a failure reproduces from the printed case index.
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "econcal/calorimetry.hpp"
#include "econcal/economy.hpp"
#include "econcal/oracles.hpp"
#include "econcal/reversibility.hpp"

using namespace econcal;

namespace {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin() { return index(2) == 0; }
  Rng& rng() { return rng_; }

  Holdings holdings(std::size_t gc) {
    Holdings h;
    h.money = log_uniform(1e-3, 10.0);
    for (std::size_t j = 0; j < gc; ++j) h.goods[j] = log_uniform(1e-3, 10.0);
    return h;
  }

  UtilitySpec two_good_spec() {
    switch (index(4)) {
      case 0: return CobbDouglas{uniform(0.5, 4), {uniform(0.5, 4), uniform(0.5, 4)}};
      case 1: return Substitutes{uniform(0.5, 4), uniform(0.5, 4)};
      case 2: return Complements{uniform(0.5, 4), uniform(0.5, 4)};
      default: return Satiable{uniform(1, 4), uniform(1, 4), uniform(0.05, 0.5), uniform(0.2, 1.0)};
    }
  }

  UtilitySpec one_good_spec() {
    const double lo = uniform(0.3, 1.0);
    switch (index(4)) {
      case 0: return CobbDouglas{uniform(0.5, 4), {uniform(0.5, 4)}};
      case 1: return PriceBandSeparable{uniform(1, 4), uniform(1, 4), lo, lo + uniform(0.05, 1.0)};
      case 2: return PriceBandAggregate{uniform(1, 4), uniform(1, 4), lo, lo + uniform(0.05, 1.0)};
      default: {
        const double b = uniform(0.1, 1.0);
        return Interdependent{uniform(1, 4), uniform(1, 4),
                              coin() ? Comparison{ExpComparison{}} : Comparison{SigmoidComparison{b + uniform(0.1, 1), b}}};
      }
    }
  }

 private:
  Rng rng_;
};

void for_all(int cases, std::uint64_t seed, const std::function<void(Gen&)>& property) {
  Gen gen(seed);
  for (int c = 0; c < cases; ++c) {
    CAPTURE(c);
    property(gen);
  }
}

double max_rel_gap(const Holdings& a, const Holdings& b, std::size_t gc) {
  double worst = 0.0;
  for (std::size_t c = 0; c < commodity_count(gc); ++c)
    worst = std::max(worst, std::abs(a[c] - b[c]) / std::max(std::abs(b[c]), 1e-300));
  return worst;
}

MacroGrid grid_of(std::size_t n1, std::size_t n2, double lo = 500.0, double hi = 2000.0) {
  MacroGrid g;
  g.money = {1000.0};
  g.goods1 = linspace(lo, hi, n1);
  g.goods2 = linspace(lo, hi, n2);
  return g;
}

// Readings carrying the CD gradient (eta N / M, alpha_j N / G_j), with iid
// relative noise.
ReadingField cd_field(const MacroGrid& grid, double a1, double a2, double noise, Rng& rng) {
  ReadingField f;
  f.grid = grid;
  std::normal_distribution<double> n01;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    MeterReading r;
    r.macro_state = grid.totals_at(k);
    r.beta = 3000.0 / r.macro_state.money * (1 + noise * n01(rng));
    r.nu = {a1 * 1000.0 / r.macro_state.goods[0] * (1 + noise * n01(rng)),
            a2 * 1000.0 / r.macro_state.goods[1] * (1 + noise * n01(rng))};
    r.se_beta = noise * r.beta;
    r.se_nu = {noise * r.nu[0], noise * r.nu[1]};
    f.readings.push_back(r);
  }
  return f;
}

double max_oracle_gap(const EntropyField& f, double a1, double a2) {
  std::vector<double> truth;
  for (std::size_t k = 0; k < f.grid.node_count(); ++k) {
    const Totals t = f.grid.totals_at(k);
    truth.push_back(cd_entropy(1000, 3.0, {a1, a2}, t.money, {t.goods[0], t.goods[1]}));
  }
  const double shift = truth[f.grid.reference_flat()] - f.fitted_S[f.grid.reference_flat()];
  double worst = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) worst = std::max(worst, std::abs(f.fitted_S[k] + shift - truth[k]));
  return worst;
}

// Largest eigenvalue of the central-difference Hessian of f at x.
double hessian_top(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x) {
  const std::size_t n = x.size();
  Eigen::MatrixXd h(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double ea = 1e-3 * x[a], eb = 1e-3 * x[b];
      auto at = [&](double da, double db) {
        auto y = x;
        y[a] += da;
        y[b] += db;
        return f(y);
      };
      h(a, b) = (at(ea, eb) - at(ea, -eb) - at(-ea, eb) + at(-ea, -eb)) / (4 * ea * eb);
    }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues().maxCoeff();
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("every draw conserves the pool and keeps holdings non-negative") {
    for_all(300, 61, [](Gen& g) {
      const bool two = g.coin();
      const std::size_t gc = two ? 2 : 1;
      const UtilitySpec si = two ? g.two_good_spec() : g.one_good_spec();
      const UtilitySpec sj = two ? g.two_good_spec() : g.one_good_spec();
      EncounterContext ci{g.holdings(gc), g.log_uniform(0.1, 5.0)};
      EncounterContext cj{g.holdings(gc), g.log_uniform(0.1, 5.0)};
      SamplerPolicy policy;
      policy.exploit_structure = g.coin();
      policy.band_mode = g.coin() ? PriceBandMode::RejectTrade : PriceBandMode::Conditional;
      const Holdings pool = ci.current + cj.current;
      for (int d = 0; d < 20; ++d) {
        const auto out = sample_outcome_general(si, sj, pool, gc, ci, cj, g.rng(), policy);
        if (!out) continue;
        CHECK(non_negative(out->i));
        CHECK(non_negative(out->j));
        CHECK(max_rel_gap(out->i + out->j, pool, gc) < 1e-12);
      }
    });
  }

  TEST_CASE("utilities are non-negative wherever they are defined") {
    for_all(2000, 62, [](Gen& g) {
      const bool two = g.coin();
      const std::size_t gc = two ? 2 : 1;
      const UtilitySpec s = two ? g.two_good_spec() : g.one_good_spec();
      const auto u = utility(s, g.holdings(gc), EncounterContext{g.holdings(gc), g.log_uniform(0.1, 5)});
      if (u) CHECK(*u >= 0.0);
    });
  }

  TEST_CASE("the pair gate does not depend on which agent is listed first") {
    for_all(2000, 63, [](Gen& g) {
      const UtilitySpec si = g.one_good_spec(), sj = g.one_good_spec();
      const Holdings ci = g.holdings(1), cj = g.holdings(1);
      const Holdings pool = ci + cj;
      Holdings oi;
      oi.money = g.uniform(0, pool.money);
      oi.goods[0] = g.uniform(0, pool.goods[0]);
      const Holdings oj = pool - oi;
      const auto di = make_density(si, {ci}), dj = make_density(sj, {cj});
      CHECK(pair_accepts(di, dj, oi, oj) == pair_accepts(dj, di, oj, oi));
    });
  }

  TEST_CASE("gauge choice shifts the fitted surface and leaves the fit unchanged") {
    for_all(20, 64, [](Gen& g) {
      ReadingField a = cd_field(grid_of(2 + g.index(6), 2 + g.index(6)), 3.0, 3.0, 0.01, g.rng());
      ReadingField b = a;
      const auto s = b.grid.shape();
      b.grid.reference_node = {0, g.index(s[1]), g.index(s[2])};
      b.grid.reference_entropy = g.uniform(-1e4, 1e4);
      const EntropyField fa = fit_entropy(a), fb = fit_entropy(b);
      const double shift = fb.fitted_S[0] - fa.fitted_S[0];
      for (std::size_t k = 0; k < fa.fitted_S.size(); ++k)
        CHECK(std::abs(fb.fitted_S[k] - fa.fitted_S[k] - shift) < 1e-8 * (1 + std::abs(shift)));
      CHECK(std::abs(fa.goodness_of_fit - fb.goodness_of_fit) <= 1e-12);
      CHECK(fb.fitted_S[b.grid.reference_flat()] == doctest::Approx(b.grid.reference_entropy));
    });
  }

  TEST_CASE("swapping the goods axes leaves the fit unchanged") {
    for_all(20, 65, [](Gen& g) {
      const std::size_t n1 = 2 + g.index(6), n2 = 2 + g.index(6);
      const ReadingField a = cd_field(grid_of(n1, n2), 3.0, 2.0, 0.01, g.rng());
      ReadingField b;
      b.grid = grid_of(n2, n1);
      b.readings.resize(a.readings.size());
      for (std::size_t k = 0; k < a.readings.size(); ++k) {
        const auto idx = a.grid.node_index(k);
        MeterReading r = a.readings[k];
        std::swap(r.macro_state.goods[0], r.macro_state.goods[1]);
        std::swap(r.nu[0], r.nu[1]);
        std::swap(r.se_nu[0], r.se_nu[1]);
        b.readings[b.grid.flat_index({idx[0], idx[2], idx[1]})] = r;
      }
      CHECK(fit_entropy(a).goodness_of_fit == doctest::Approx(fit_entropy(b).goodness_of_fit).epsilon(1e-9));
    });
  }

  TEST_CASE("exact gradients fit within the trapezoid truncation bound") {
    // Trapezoid error on c / x over [x, x + h] is at most c h^3 / (6 x^3).
    // The true surface is a feasible potential, so the least-squares
    // residual cannot exceed the sum of squared edge errors.
    for_all(10, 66, [](Gen& g) {
      const double a1 = g.uniform(1, 4), a2 = g.uniform(1, 4);
      const std::size_t n = 3 + g.index(8);
      const ReadingField f = cd_field(grid_of(n, n), a1, a2, 0.0, g.rng());
      const EntropyField fit = fit_entropy(f);
      double bound = 0.0;
      for (const auto& [x, y] : grid_edges(f.grid)) {
        const Totals lo = f.grid.totals_at(x), hi = f.grid.totals_at(y);
        for (std::size_t j = 0; j < 2; ++j) {
          const double h = hi.goods[j] - lo.goods[j];
          if (h == 0.0) continue;
          const double coef = (j == 0 ? a1 : a2) * 1000.0;
          const double e = coef * h * h * h / (6.0 * std::pow(lo.goods[j], 3));
          bound += e * e;
        }
      }
      CHECK(fit.rss <= bound);
    });
  }

  TEST_CASE("halving the grid spacing brings the fit closer to the oracle") {
    Gen g(67);
    for (int seed = 0; seed < 5; ++seed) {
      CAPTURE(seed);
      const double coarse = max_oracle_gap(fit_entropy(cd_field(grid_of(4, 4), 3.0, 3.0, 1e-4, g.rng())), 3.0, 3.0);
      const double fine = max_oracle_gap(fit_entropy(cd_field(grid_of(7, 7), 3.0, 3.0, 1e-4, g.rng())), 3.0, 3.0);
      CHECK(fine < coarse);
    }
  }

  TEST_CASE("closed-form entropies are concave") {
    for_all(200, 68, [](Gen& g) {
      const double eta = g.uniform(0.5, 4), a1 = g.uniform(0.5, 4), a2 = g.uniform(0.5, 4);
      const std::vector<double> x{g.log_uniform(100, 5000), g.log_uniform(100, 5000), g.log_uniform(100, 5000)};
      const double cd = hessian_top([&](const std::vector<double>& y) {
        return cd_entropy(1000, eta, {a1, a2}, y[0], {y[1], y[2]});
      }, x);
      CHECK(cd < 0.0);
      const double ie = hessian_top([&](const std::vector<double>& y) {
        return interdependent_exp_entropy(1000, eta, a1, y[0], y[1]);
      }, {x[0], x[1]});
      CHECK(ie < 0.0);
      std::vector<AgentExponents> agents(300, AgentExponents{eta, {a1, a2}});
      agents.insert(agents.end(), 700, AgentExponents{a2, {eta, a1}});
      const double het = hessian_top([&](const std::vector<double>& y) {
        return hetero_cd_entropy(agents, y[0], {y[1], y[2]});
      }, x);
      CHECK(het < 0.0);
    });
  }

  TEST_CASE("free energies of mixtures are sums of their parts") {
    for_all(500, 69, [](Gen& g) {
      FreeEnergySpec mix;
      double sum = 0.0;
      const double beta = g.log_uniform(0.01, 10);
      const std::vector<double> nu{g.log_uniform(0.01, 10), g.log_uniform(0.01, 10)};
      for (std::size_t c = 0, n = 1 + g.index(4); c < n; ++c) {
        FreeEnergyFamily fam;
        switch (g.index(3)) {
          case 0: fam = CdFree{g.uniform(0.5, 4), {g.uniform(0.5, 4), g.uniform(0.5, 4)}}; break;
          case 1: fam = SubstitutesFree{g.uniform(0.5, 4), g.uniform(0.5, 4)}; break;
          default: fam = ComplementsFree{g.uniform(0.5, 4), g.uniform(0.5, 4)}; break;
        }
        const FreeEnergyComponent part{1 + g.index(500), fam};
        mix.components.push_back(part);
        sum += free_energy(FreeEnergySpec{{part}}, beta, nu);
      }
      CHECK(free_energy(mix, beta, nu) == doctest::Approx(sum).epsilon(1e-12));
    });
  }

  TEST_CASE("homogeneous lists reduce the heterogeneous entropy to the cobb-douglas one") {
    for_all(200, 70, [](Gen& g) {
      const std::size_t n = 1 + g.index(200);
      const AgentExponents e{g.uniform(0.5, 4), {g.uniform(0.5, 4), g.uniform(0.5, 4)}};
      const std::vector<AgentExponents> agents(n, e);
      const double m = g.log_uniform(10, 1e4), g1 = g.log_uniform(10, 1e4), g2 = g.log_uniform(10, 1e4);
      CHECK(hetero_cd_entropy(agents, m, {g1, g2}) ==
            doctest::Approx(cd_entropy(n, e.eta, e.alphas, m, {g1, g2})).epsilon(1e-12));
    });
  }

  TEST_CASE("legendre entropy of random mixtures is stationary and scales with the degree") {
    for_all(30, 71, [](Gen& g) {
      FreeEnergySpec mix;
      double degree = 0.0;
      for (std::size_t c = 0, n = 1 + g.index(3); c < n; ++c) {
        const std::size_t count = 100 * (1 + g.index(5));
        const double eta = g.uniform(1, 4), alpha = g.uniform(1, 4);
        if (g.coin()) {
          mix.components.push_back({count, SubstitutesFree{eta, alpha}});
        } else {
          mix.components.push_back({count, ComplementsFree{eta, alpha}});
        }
        degree += count * (eta + alpha + 1.0);
      }
      const double m = g.log_uniform(300, 3000);
      const std::vector<double> goods{g.log_uniform(300, 3000), g.log_uniform(300, 3000)};
      const double lambda = g.log_uniform(0.5, 2.0);
      const double s = legendre_entropy(mix, m, goods);
      const double scaled = legendre_entropy(mix, lambda * m, {lambda * goods[0], lambda * goods[1]});
      CHECK(scaled - s == doctest::Approx(degree * std::log(lambda)).epsilon(1e-8).scale(1.0));
    });
  }

  TEST_CASE("symmetric exchange weights satisfy detailed balance") {
    for_all(5, 72, [](Gen& g) {
      const auto ui = conditional_utility(CobbDouglas{g.uniform(1, 4), {g.uniform(1, 4)}});
      const auto uj = conditional_utility(CobbDouglas{g.uniform(1, 4), {g.uniform(1, 4)}});
      const std::vector<double> k{g.uniform(0.5, 2), g.uniform(0.5, 2)};
      CHECK(reversibility_check(ui, uj, k, 20, g.rng()).max_violation < 1e-6);
    });
  }
}
