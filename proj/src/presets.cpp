#include "econcal/presets.hpp"

#include <functional>
#include <map>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

using nlohmann::json;

json axis(double lo, double hi, int count) { return {{"min", lo}, {"max", hi}, {"count", count}}; }

json cd(double eta, double a1, double a2) {
  return {{"family", "cobb_douglas"}, {"eta", eta}, {"alphas", {a1, a2}}};
}

json desk_protocol() {
  return {{"burn_in_sweeps", 100}, {"n_samples", 100}, {"sample_stride_sweeps", 2},
          {"cross_rate", 0.2}, {"n_batches", 10}};
}

// Two goods at fixed money M = 1000 on an 8 x 8 goods grid.
json two_goods(const std::string& name, json population, const std::string& oracle) {
  return {{"name", name},
          {"seed", 20240601},
          {"parallelism", 1},
          {"economy",
           {{"n_agents", 1000},
            {"goods_count", 2},
            {"population", std::move(population)},
            {"topology", {{"kind", "complete"}}},
            {"totals", {{"money", 1000.0}, {"goods", {1000.0, 1000.0}}}}}},
          {"meter", {{"n_agents", 100}, {"eta", 2.0}, {"alphas", {2.0, 2.0}}}},
          {"protocol", desk_protocol()},
          {"grid",
           {{"money", {1000.0}},
            {"goods1", axis(500.0, 2000.0, 8)},
            {"goods2", axis(500.0, 2000.0, 8)},
            {"reference_node", {0, 0, 0}},
            {"reference_entropy", 0.0}}},
          {"oracle", oracle}};
}

// One good on an 8 x 8 (money, goods) grid.
json one_good(const std::string& name, json population, const std::string& oracle, json topology,
              json money_axis, json goods_axis) {
  return {{"name", name},
          {"seed", 20240601},
          {"parallelism", 1},
          {"economy",
           {{"n_agents", 1000},
            {"goods_count", 1},
            {"population", std::move(population)},
            {"topology", std::move(topology)},
            {"totals", {{"money", 1000.0}, {"goods", {1000.0}}}}}},
          {"meter", {{"n_agents", 100}, {"eta", 2.0}, {"alphas", {2.0}}}},
          {"protocol", desk_protocol()},
          {"grid",
           {{"money", std::move(money_axis)},
            {"goods1", std::move(goods_axis)},
            {"reference_node", {0, 0, 0}},
            {"reference_entropy", 0.0}}},
          {"oracle", oracle}};
}

json band(const char* family, double mu1, double mu2) {
  return {{"family", family}, {"eta", 3.0}, {"alpha", 3.0}, {"mu1", mu1}, {"mu2", mu2}};
}

json complete() { return {{"kind", "complete"}}; }

struct Preset {
  std::string description;
  std::function<json()> build;
};

const std::map<std::string, Preset>& registry() {
  static const std::map<std::string, Preset> presets{
      {"fig1",
       {"homogeneous Cobb-Douglas economy, exponents (3,3,3)",
        [] {
          json c = two_goods("fig1", json::array({{{"count", 1000}, {"utility", cd(3, 3, 3)}}}), "cobb_douglas");
          c["money_line"] = {500.0, 1000.0, 2000.0};
          return c;
        }}},
      {"fig2",
       {"heterogeneous Cobb-Douglas economy, half (3,3,3) and half (2,2,2)",
        [] {
          return two_goods("fig2",
                           json::array({{{"count", 500}, {"utility", cd(3, 3, 3)}},
                                        {{"count", 500}, {"utility", cd(2, 2, 2)}}}),
                           "hetero_cobb_douglas");
        }}},
      {"fig3",
       {"500 substitutes and 500 complements agents, alpha = eta = 3",
        [] {
          json c = two_goods(
              "fig3",
              json::array({{{"count", 500}, {"utility", {{"family", "substitutes"}, {"eta", 3.0}, {"alpha", 3.0}}}},
                           {{"count", 500}, {"utility", {{"family", "complements"}, {"eta", 3.0}, {"alpha", 3.0}}}}}),
              "free_energy");
          c["sampler"] = {{"probes_per_axis", 8}};
          return c;
        }}},
      {"fig4",
       {"300 substitutes, 300 complements and 400 Cobb-Douglas (3,3,3) agents",
        [] {
          json c = two_goods(
              "fig4",
              json::array({{{"count", 300}, {"utility", {{"family", "substitutes"}, {"eta", 3.0}, {"alpha", 3.0}}}},
                           {{"count", 300}, {"utility", {{"family", "complements"}, {"eta", 3.0}, {"alpha", 3.0}}}},
                           {{"count", 400}, {"utility", cd(3, 3, 3)}}}),
              "free_energy");
          c["sampler"] = {{"probes_per_axis", 8}};
          return c;
        }}},
      {"fig6",
       {"satiable agents for good 1 (c = 0.3, k = 0.6) at money M = 1000",
        [] {
          json c = two_goods("fig6",
                             json::array({{{"count", 1000},
                                           {"utility",
                                            {{"family", "satiable"}, {"eta", 3.0}, {"alpha", 3.0}, {"c", 0.3}, {"k", 0.6}}}}}),
                             "none");
          // Good 1 stays below the satiation point where its value turns negative.
          c["grid"]["goods1"] = axis(500.0, 900.0, 8);
          c["economy"]["totals"]["goods"] = {700.0, 1000.0};
          c["money_line"] = {500.0, 1000.0, 2000.0};
          return c;
        }}},
      {"fig7",
       {"Cobb-Douglas (3,3) agents trading only at implied prices in (0.9, 1.1)",
        [] {
          return one_good("fig7", json::array({{{"count", 1000}, {"utility", band("price_band_separable", 0.9, 1.1)}}}),
                          "price_band_cd", complete(), axis(700.0, 1400.0, 8), axis(700.0, 1400.0, 8));
        }}},
      {"band_wide",
       {"as fig7 with the price band widened to (0.5, 1.5)",
        [] {
          return one_good("band_wide",
                          json::array({{{"count", 1000}, {"utility", band("price_band_separable", 0.5, 1.5)}}}),
                          "price_band_cd", complete(), axis(700.0, 1400.0, 8), axis(700.0, 1400.0, 8));
        }}},
      {"fig8",
       {"aggregate-form price-sensitive agents, band (0.9, 1.1)",
        [] {
          return one_good("fig8", json::array({{{"count", 1000}, {"utility", band("price_band_aggregate", 0.9, 1.1)}}}),
                          "none", complete(), axis(700.0, 1400.0, 8), axis(700.0, 1400.0, 8));
        }}},
      {"fig9",
       {"200 aggregate-form price-sensitive agents of each of five bands (0.5,1.5) ... (0.9,1.1)",
        [] {
          json pop = json::array();
          for (int b = 0; b < 5; ++b) {
            const double w = 0.5 - 0.1 * b;
            pop.push_back({{"count", 200}, {"utility", band("price_band_aggregate", 1.0 - w, 1.0 + w)}});
          }
          return one_good("fig9", pop, "none", complete(), axis(700.0, 1400.0, 8), axis(700.0, 1400.0, 8));
        }}},
      {"fig10",
       {"interdependent agents on a circle with exponential comparison U(x) = e^x",
        [] {
          json u = {{"family", "interdependent"}, {"eta", 3.0}, {"alpha", 3.0}, {"comparison", {{"kind", "exp"}}}};
          return one_good("fig10", json::array({{{"count", 1000}, {"utility", u}}}), "interdependent_exp",
                          {{"kind", "circle_excluding_comparison"}, {"comparison_radius", 1}},
                          axis(500.0, 2000.0, 8), axis(500.0, 2000.0, 8));
        }}},
      {"fig11",
       {"interdependent agents with sigmoid comparison, a = 3/2, b = 1/2",
        [] {
          json u = {{"family", "interdependent"},
                    {"eta", 3.0},
                    {"alpha", 3.0},
                    {"comparison", {{"kind", "sigmoid"}, {"a", 1.5}, {"b", 0.5}}}};
          return one_good("fig11", json::array({{{"count", 1000}, {"utility", u}}}), "none",
                          {{"kind", "circle_excluding_comparison"}, {"comparison_radius", 1}},
                          axis(500.0, 2000.0, 8), axis(500.0, 2000.0, 8));
        }}},
      {"synthetic_noise",
       {"exact Cobb-Douglas readings with 1% relative noise, no simulation",
        [] {
          json c = two_goods("synthetic_noise", json::array({{{"count", 1000}, {"utility", cd(3, 3, 3)}}}),
                             "cobb_douglas");
          c["synthetic"] = {{"noise", 0.01}, {"se_fraction", 0.01}};
          return c;
        }}},
  };
  return presets;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& [name, p] : registry()) out.push_back({name, p.description});
  return out;
}

json emit_preset(const std::string& name) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) {
    std::string known;
    for (const auto& [n, p] : r) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset \"" + name + "\"; known presets: " + known);
  }
  return it->second.build();
}

}  // namespace econcal
