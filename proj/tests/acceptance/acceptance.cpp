// End-to-end acceptance run: every preset pipeline plus the property suites,
// one PASS/FAIL line per criterion. Exit status is non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "econcal/config.hpp"
#include "econcal/economy.hpp"
#include "econcal/errors.hpp"
#include "econcal/experiment.hpp"
#include "econcal/oracles.hpp"
#include "econcal/presets.hpp"
#include "econcal/reversibility.hpp"

using namespace econcal;

namespace {

// Tolerances, fixed here so a run cannot loosen them.
constexpr double kFitTol = 1e-4;
constexpr double kAgreementTol = 1e-3;
constexpr double kMixtureAgreementTol = 2e-2;
constexpr double kBandInvarianceTol = 1e-3;
constexpr double kNuMseTol = 1e-3;
constexpr double kMoneySlopeTol = 0.05;
constexpr double kKsTol = 0.02;
constexpr double kLegendreTol = 1e-6;
constexpr double kReversibleTol = 1e-6;
constexpr double kIrreversibleMin = 0.5;
constexpr double kConservationTol = 1e-9;

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::map<std::string, ExperimentResult> results;

const ExperimentResult& run(const std::string& preset) {
  auto it = results.find(preset);
  if (it != results.end()) return it->second;
  ExperimentConfig c = config_from_json(emit_preset(preset));
  c.parallelism = std::max(1u, std::thread::hardware_concurrency());
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult r = run_pipeline(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  [%s] fit %s  agreement %s  concave %s (worst %s, tol %s)  flagged %zu  %.0fs\n", preset.c_str(),
              fmt(r.field.goodness_of_fit).c_str(),
              r.goodness_of_agreement ? fmt(*r.goodness_of_agreement).c_str() : "-",
              r.concavity.pass ? "yes" : "no", fmt(r.concavity.worst_eigenvalue).c_str(),
              fmt(r.concavity.tolerance).c_str(), r.field.flagged, secs);
  std::fflush(stdout);
  return results.emplace(preset, std::move(r)).first->second;
}

void fit_and_agree(Verdict& o, const std::string& preset, double agreement_tol) {
  const auto& r = run(preset);
  o.require(r.field.goodness_of_fit <= kFitTol, preset + " fit " + fmt(r.field.goodness_of_fit));
  const double a = r.goodness_of_agreement.value_or(INFINITY);
  o.require(a <= agreement_tol, preset + " agreement " + fmt(a));
}

Verdict criterion1() {
  Verdict o;
  fit_and_agree(o, "fig1", kAgreementTol);
  return o;
}

Verdict criterion2() {
  Verdict o;
  fit_and_agree(o, "fig2", kAgreementTol);
  return o;
}

Verdict criterion3() {
  Verdict o;
  fit_and_agree(o, "fig3", kMixtureAgreementTol);
  fit_and_agree(o, "fig4", kMixtureAgreementTol);
  return o;
}

Verdict criterion4() {
  Verdict o;
  for (const char* p : {"fig6", "fig7", "fig8", "fig9", "fig10", "fig11"}) {
    const auto& r = run(p);
    o.require(r.field.goodness_of_fit <= kFitTol, std::string(p) + " fit " + fmt(r.field.goodness_of_fit));
  }
  return o;
}

Verdict criterion5() {
  Verdict o;
  fit_and_agree(o, "fig7", kAgreementTol);
  fit_and_agree(o, "band_wide", kAgreementTol);
  // Same grid and gauge, so the two fitted surfaces compare node by node.
  const double between = goodness_of_agreement(run("band_wide").field.fitted_S, run("fig7").field.fitted_S);
  o.require(between <= kBandInvarianceTol, "band (0.5,1.5) vs (0.9,1.1) surfaces " + fmt(between));
  return o;
}

Verdict criterion6() {
  Verdict o;
  const auto& r = run("fig10");
  const double mse = r.nu_check ? r.nu_check->mean_square_relative_error : INFINITY;
  o.require(mse <= kNuMseTol, "nu mean-square relative error " + fmt(mse));
  const double a = r.goodness_of_agreement.value_or(INFINITY);
  o.require(a <= kAgreementTol, "entropy agreement " + fmt(a));
  return o;
}

Verdict criterion7() {
  Verdict o;
  for (const char* p : {"fig1", "fig2", "fig3", "fig4", "fig6", "fig7", "band_wide", "fig8", "fig9", "fig10", "fig11"}) {
    const auto& c = run(p).concavity;
    o.require(c.pass, std::string(p) + " " + fmt(c.worst_eigenvalue) + "<=" + fmt(c.tolerance));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Property suites

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

Holdings amounts(double m, double g1, double g2 = 0.0) {
  Holdings h;
  h.money = m;
  h.goods = {g1, g2};
  return h;
}

double conservation_gap() {
  std::vector<UtilitySpec> specs;
  for (int i = 0; i < 100; ++i) {
    switch (i % 4) {
      case 0: specs.push_back(CobbDouglas{3.0, {3.0, 3.0}}); break;
      case 1: specs.push_back(Substitutes{3.0, 3.0}); break;
      case 2: specs.push_back(Complements{3.0, 3.0}); break;
      default: specs.push_back(Satiable{}); break;
    }
  }
  Economy e = make_economy(specs, CompleteTopology{}, amounts(100, 70, 100), 2);
  const Totals start = e.sum_holdings();
  Rng rng(81);
  SamplerStats stats;
  sweep(e, 1'000'000, rng, {}, stats);
  double gap = 0.0;
  const Totals end = e.sum_holdings();
  for (std::size_t c = 0; c < 3; ++c) gap = std::max(gap, std::abs(end[c] - start[c]) / start[c]);
  for (const auto& h : e.all_holdings())
    if (!non_negative(h)) return INFINITY;
  return gap;
}

double sampler_ks() {
  Rng rng(82);
  SamplerPolicy generic;
  generic.exploit_structure = false;
  const CobbDouglas a{3.0, {2.0}}, b{2.0, {3.0}};
  const Holdings ci = amounts(1.5, 0.5), cj = amounts(0.5, 1.5);
  std::vector<double> gm, gg, em, eg;
  for (int k = 0; k < 100'000; ++k) {
    const auto out = sample_outcome_general(a, b, ci + cj, 1, {ci}, {cj}, rng, generic);
    if (!out) continue;
    gm.push_back(out->i.money);
    gg.push_back(out->i.goods[0]);
    em.push_back(sample_cd_split(3.0, 2.0, 2.0, rng).first);
    eg.push_back(sample_cd_split(2.0, 3.0, 2.0, rng).first);
  }
  return std::max(ks_distance(gm, em), ks_distance(gg, eg));
}

// Exact CD gradients on the acceptance grid; returns (rss, bound) where the
// bound sums squared trapezoid errors c h^3 / (6 x^3) over the edges.
std::pair<double, double> synthetic_fit() {
  ExperimentConfig c = config_from_json(emit_preset("synthetic_noise"));
  c.synthetic->noise = 0.0;
  c.synthetic->se_fraction = 0.0;
  const ReadingField f = synthetic_field(c);
  const EntropyField fit = fit_entropy(f);
  double bound = 0.0;
  for (const auto& [x, y] : grid_edges(f.grid)) {
    const Totals lo = f.grid.totals_at(x), hi = f.grid.totals_at(y);
    for (std::size_t comm = 0; comm < 3; ++comm) {
      const double h = hi[comm] - lo[comm];
      if (h == 0.0) continue;
      const double e = 3000.0 * h * h * h / (6.0 * lo[comm] * lo[comm] * lo[comm]);
      bound += e * e;
    }
  }
  return {fit.rss, bound};
}

double legendre_spread() {
  const FreeEnergySpec spec{{{1000, CdFree{3.0, {3.0, 3.0}}}}};
  double lo = INFINITY, hi = -INFINITY;
  for (double m : {500.0, 1000.0, 1500.0, 2000.0, 3000.0})
    for (double g1 : {500.0, 1000.0, 1500.0, 2000.0, 3000.0})
      for (double g2 : {500.0, 1000.0, 1500.0, 2000.0, 3000.0}) {
        const double d = legendre_entropy(spec, m, {g1, g2}) - cd_entropy(1000, 3.0, {3.0, 3.0}, m, {g1, g2});
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  return hi - lo;
}

std::pair<double, double> reversibility() {
  Rng rng(83);
  const std::vector<double> k{1.0, 1.0};
  // The aggregate kernel has a kink along the band edge; the quadrature needs
  // the finer lattice to converge there.
  ReversibilityOptions opts;
  opts.lattice = 128;
  const auto cd = conditional_utility(CobbDouglas{3.0, {3.0}});
  const auto same = conditional_utility(PriceBandSeparable{3.0, 3.0, 0.9, 1.1});
  double symmetric = reversibility_check(cd, cd, k, 100, rng, opts).max_violation;
  symmetric = std::max(symmetric, reversibility_check(same, same, k, 100, rng, opts).max_violation);
  // Pairs drawn from the five-band population: the widest band against each
  // narrower one.
  double asymmetric = 0.0;
  for (int b = 1; b < 5; ++b) {
    const double w = 0.5 - 0.1 * b;
    const auto wide = conditional_utility(PriceBandAggregate{3.0, 3.0, 0.5, 1.5});
    const auto narrow = conditional_utility(PriceBandAggregate{3.0, 3.0, 1.0 - w, 1.0 + w});
    asymmetric = std::max(asymmetric, reversibility_check(wide, narrow, k, 100, rng, opts).max_violation);
  }
  return {symmetric, asymmetric};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool reproducible() {
  nlohmann::json c = emit_preset("fig1");
  c["name"] = "repro";
  c["economy"]["n_agents"] = 100;
  c["economy"]["population"][0]["count"] = 100;
  c["meter"]["n_agents"] = 20;
  c["protocol"] = {{"burn_in_sweeps", 20}, {"n_samples", 20}, {"sample_stride_sweeps", 1},
                   {"cross_rate", 0.2}, {"n_batches", 10}};
  c["grid"] = {{"money", {100.0}}, {"goods1", {60.0, 100.0, 140.0}}, {"goods2", {80.0, 120.0}}};
  c["money_line"] = {50.0, 100.0, 200.0};
  const auto root = std::filesystem::temp_directory_path() / "econcal_acceptance";
  std::filesystem::remove_all(root);
  std::vector<std::string> outputs;
  for (std::size_t par : {1, 1, 3}) {
    c["parallelism"] = par;
    const auto dir = root / ("run" + std::to_string(outputs.size()));
    run_experiment(config_from_json(c), dir.string());
    outputs.push_back(slurp(dir / "field.csv") + slurp(dir / "field_long.csv"));
  }
  std::filesystem::remove_all(root);
  return !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
}

Verdict criterion8() {
  Verdict o;
  const double gap = conservation_gap();
  o.require(gap <= kConservationTol, "1e6 encounters: totals drift " + fmt(gap) + ", holdings non-negative");
  const double ks = sampler_ks();
  o.require(ks < kKsTol, "rejection vs exact split KS " + fmt(ks));
  const auto [rss, bound] = synthetic_fit();
  o.require(rss <= bound, "exact-gradient rss " + fmt(rss) + " <= truncation bound " + fmt(bound));
  const double spread = legendre_spread();
  o.require(spread <= kLegendreTol, "Legendre minus closed form spread " + fmt(spread));
  const auto [sym, asym] = reversibility();
  o.require(sym <= kReversibleTol, "symmetric reversibility violation " + fmt(sym));
  o.require(asym > kIrreversibleMin, "five-band violation " + fmt(asym));
  o.require(reproducible(), "byte-identical outputs across reruns and parallelism");
  return o;
}

Verdict criterion9() {
  Verdict o;
  for (const char* p : {"fig1", "fig6"}) {
    const auto& r = run(p);
    if (!r.pure_money) {
      o.require(false, std::string(p) + " has no pure-money report");
      continue;
    }
    const auto& pm = *r.pure_money;
    std::string slopes;
    for (std::size_t j = 0; j < pm.goods_slopes.size(); ++j)
      slopes += (j ? ", " : "") + fmt(pm.goods_slopes[j]) + "+-" + fmt(pm.goods_slope_se[j]);
    o.require(pm.goods_independent(), std::string(p) + " goods slopes " + slopes);
    o.require(std::abs(pm.money_value_exponent + 1.0) <= kMoneySlopeTol,
              std::string(p) + " money slope " + fmt(pm.money_value_exponent));
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"CD self-consistency", criterion1},
      {"heterogeneous CD", criterion2},
      {"mixtures vs free energies", criterion3},
      {"intractable families path independence", criterion4},
      {"price-band CD equivalence", criterion5},
      {"interdependent exact case", criterion6},
      {"concavity", criterion7},
      {"property suites", criterion8},
      {"pure money", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
