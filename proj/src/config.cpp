#include "econcal/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Collects every problem instead of stopping at the first.
struct Issues {
  std::vector<std::string> list;
  void add(const std::string& path, const std::string& what) { list.push_back(path + ": " + what); }
};

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed,
                Issues& issues) {
  if (!j.is_object()) return;
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) issues.add(path + "." + k, "unknown key");
}

std::optional<double> number(const json& j, const std::string& key, const std::string& path,
                             Issues& issues, std::optional<double> fallback = std::nullopt) {
  if (!j.is_object() || !j.contains(key)) {
    if (!fallback) issues.add(path + "." + key, "missing");
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    issues.add(path + "." + key, "must be a number");
    return fallback;
  }
  return v.get<double>();
}

std::optional<std::size_t> count(const json& j, const std::string& key, const std::string& path,
                                 Issues& issues, std::optional<std::size_t> fallback = std::nullopt) {
  if (!j.is_object() || !j.contains(key)) {
    if (!fallback) issues.add(path + "." + key, "missing");
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    issues.add(path + "." + key, "must be a non-negative integer");
    return fallback;
  }
  return v.get<std::size_t>();
}

std::vector<double> number_list(const json& v, const std::string& path, Issues& issues) {
  std::vector<double> out;
  if (!v.is_array()) {
    issues.add(path, "must be a list of numbers");
    return out;
  }
  for (const auto& e : v) {
    if (!e.is_number()) {
      issues.add(path, "must be a list of numbers");
      return {};
    }
    out.push_back(e.get<double>());
  }
  return out;
}

// An axis is a list of values or {"min", "max", "count"}.
std::vector<double> parse_axis(const json& v, const std::string& path, Issues& issues) {
  if (v.is_object()) {
    check_keys(v, path, {"min", "max", "count"}, issues);
    const auto lo = number(v, "min", path, issues);
    const auto hi = number(v, "max", path, issues);
    const auto n = count(v, "count", path, issues);
    if (!lo || !hi || !n) return {};
    if (*n == 0) issues.add(path + ".count", "must be positive");
    if (*n > 1 && !(*hi > *lo)) issues.add(path, "max must exceed min");
    return linspace(*lo, *hi, *n);
  }
  return number_list(v, path, issues);
}

const char* kFamilies =
    "cobb_douglas, substitutes, complements, satiable, price_band_separable, "
    "price_band_aggregate, interdependent";

std::optional<UtilitySpec> parse_utility(const json& j, const std::string& path, Issues& issues) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    issues.add(path + ".family", std::string("missing; one of ") + kFamilies);
    return std::nullopt;
  }
  const std::string family = j.at("family").get<std::string>();
  const std::size_t before = issues.list.size();
  UtilitySpec spec;
  if (family == "cobb_douglas") {
    check_keys(j, path, {"family", "eta", "alphas"}, issues);
    CobbDouglas s;
    s.eta = number(j, "eta", path, issues).value_or(1.0);
    if (j.contains("alphas")) s.alphas = number_list(j.at("alphas"), path + ".alphas", issues);
    else issues.add(path + ".alphas", "missing");
    spec = s;
  } else if (family == "substitutes" || family == "complements") {
    check_keys(j, path, {"family", "eta", "alpha"}, issues);
    const double eta = number(j, "eta", path, issues).value_or(1.0);
    const double alpha = number(j, "alpha", path, issues).value_or(1.0);
    if (family == "substitutes") spec = Substitutes{eta, alpha};
    else spec = Complements{eta, alpha};
  } else if (family == "satiable") {
    check_keys(j, path, {"family", "eta", "alpha", "c", "k"}, issues);
    Satiable s;
    s.eta = number(j, "eta", path, issues, s.eta).value_or(s.eta);
    s.alpha = number(j, "alpha", path, issues, s.alpha).value_or(s.alpha);
    s.c = number(j, "c", path, issues, s.c).value_or(s.c);
    s.k = number(j, "k", path, issues, s.k).value_or(s.k);
    spec = s;
  } else if (family == "price_band_separable" || family == "price_band_aggregate") {
    check_keys(j, path, {"family", "eta", "alpha", "mu1", "mu2"}, issues);
    PriceBandSeparable s;
    s.eta = number(j, "eta", path, issues, s.eta).value_or(s.eta);
    s.alpha = number(j, "alpha", path, issues, s.alpha).value_or(s.alpha);
    s.mu1 = number(j, "mu1", path, issues, s.mu1).value_or(s.mu1);
    s.mu2 = number(j, "mu2", path, issues, s.mu2).value_or(s.mu2);
    if (family == "price_band_separable") spec = s;
    else spec = PriceBandAggregate{s.eta, s.alpha, s.mu1, s.mu2};
  } else if (family == "interdependent") {
    check_keys(j, path, {"family", "eta", "alpha", "comparison"}, issues);
    Interdependent s;
    s.eta = number(j, "eta", path, issues, s.eta).value_or(s.eta);
    s.alpha = number(j, "alpha", path, issues, s.alpha).value_or(s.alpha);
    if (j.contains("comparison")) {
      const json& c = j.at("comparison");
      const std::string cp = path + ".comparison";
      const std::string kind = c.is_object() && c.contains("kind") && c.at("kind").is_string()
                                   ? c.at("kind").get<std::string>()
                                   : "";
      if (kind == "exp") {
        check_keys(c, cp, {"kind"}, issues);
        s.comparison = ExpComparison{};
      } else if (kind == "sigmoid") {
        check_keys(c, cp, {"kind", "a", "b"}, issues);
        SigmoidComparison sig;
        sig.a = number(c, "a", cp, issues, sig.a).value_or(sig.a);
        sig.b = number(c, "b", cp, issues, sig.b).value_or(sig.b);
        s.comparison = sig;
      } else {
        issues.add(cp + ".kind", "must be \"exp\" or \"sigmoid\"");
      }
    }
    spec = s;
  } else {
    issues.add(path + ".family", "unknown family \"" + family + "\"; one of " + kFamilies);
    return std::nullopt;
  }
  if (issues.list.size() != before) return std::nullopt;
  for (const auto& v : violations(spec)) issues.add(path, v);
  return spec;
}

std::optional<Topology> parse_topology(const json& j, const std::string& path, Issues& issues) {
  const std::string kind = j.is_object() && j.contains("kind") && j.at("kind").is_string()
                               ? j.at("kind").get<std::string>()
                               : "";
  if (kind == "complete") {
    check_keys(j, path, {"kind"}, issues);
    return CompleteTopology{};
  }
  if (kind == "circle_excluding_comparison") {
    check_keys(j, path, {"kind", "comparison_radius"}, issues);
    const auto r = count(j, "comparison_radius", path, issues, 1);
    return CircleExcludingComparison{r.value_or(1)};
  }
  if (kind == "edges") {
    check_keys(j, path, {"kind", "edges"}, issues);
    ExplicitEdges e;
    if (!j.contains("edges") || !j.at("edges").is_array()) {
      issues.add(path + ".edges", "must be a list of [a, b] or [a, b, rate]");
      return std::nullopt;
    }
    for (const auto& x : j.at("edges")) {
      if (!x.is_array() || x.size() < 2 || x.size() > 3 || !x[0].is_number_integer() ||
          !x[1].is_number_integer() || (x.size() == 3 && !x[2].is_number()) || x[0].get<long long>() < 0 ||
          x[1].get<long long>() < 0) {
        issues.add(path + ".edges", "each edge must be [a, b] or [a, b, rate] with agent indices");
        return std::nullopt;
      }
      e.edges.push_back({x[0].get<std::size_t>(), x[1].get<std::size_t>(),
                         x.size() == 3 ? x[2].get<double>() : 1.0});
    }
    return e;
  }
  issues.add(path + ".kind", "must be \"complete\", \"circle_excluding_comparison\" or \"edges\"");
  return std::nullopt;
}

json topology_to_json(const Topology& t) {
  return std::visit(Overloaded{
                        [](const CompleteTopology&) { return json{{"kind", "complete"}}; },
                        [](const CircleExcludingComparison& c) {
                          return json{{"kind", "circle_excluding_comparison"},
                                      {"comparison_radius", c.comparison_radius}};
                        },
                        [](const ExplicitEdges& e) {
                          json edges = json::array();
                          for (const auto& x : e.edges) edges.push_back({x.a, x.b, x.rate});
                          return json{{"kind", "edges"}, {"edges", edges}};
                        },
                    },
                    t);
}

std::optional<OracleKind> parse_oracle(const std::string& s) {
  for (OracleKind k : {OracleKind::None, OracleKind::CobbDouglas, OracleKind::HeteroCobbDouglas,
                       OracleKind::FreeEnergy, OracleKind::InterdependentExp, OracleKind::PriceBandCd})
    if (oracle_name(k) == s) return k;
  return std::nullopt;
}

json totals_to_json(const Totals& t, std::size_t goods_count) {
  json goods = json::array();
  for (std::size_t j = 0; j < goods_count; ++j) goods.push_back(t.goods[j]);
  return json{{"money", t.money}, {"goods", goods}};
}

}  // namespace

std::string oracle_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::None: return "none";
    case OracleKind::CobbDouglas: return "cobb_douglas";
    case OracleKind::HeteroCobbDouglas: return "hetero_cobb_douglas";
    case OracleKind::FreeEnergy: return "free_energy";
    case OracleKind::InterdependentExp: return "interdependent_exp";
    case OracleKind::PriceBandCd: return "price_band_cd";
  }
  return "none";
}

json utility_to_json(const UtilitySpec& spec) {
  return std::visit(
      Overloaded{
          [](const CobbDouglas& s) { return json{{"family", "cobb_douglas"}, {"eta", s.eta}, {"alphas", s.alphas}}; },
          [](const Substitutes& s) { return json{{"family", "substitutes"}, {"eta", s.eta}, {"alpha", s.alpha}}; },
          [](const Complements& s) { return json{{"family", "complements"}, {"eta", s.eta}, {"alpha", s.alpha}}; },
          [](const Satiable& s) {
            return json{{"family", "satiable"}, {"eta", s.eta}, {"alpha", s.alpha}, {"c", s.c}, {"k", s.k}};
          },
          [](const PriceBandSeparable& s) {
            return json{{"family", "price_band_separable"}, {"eta", s.eta}, {"alpha", s.alpha},
                        {"mu1", s.mu1}, {"mu2", s.mu2}};
          },
          [](const PriceBandAggregate& s) {
            return json{{"family", "price_band_aggregate"}, {"eta", s.eta}, {"alpha", s.alpha},
                        {"mu1", s.mu1}, {"mu2", s.mu2}};
          },
          [](const Interdependent& s) {
            json c = std::holds_alternative<ExpComparison>(s.comparison) ? json{{"kind", "exp"}} : json{};
            if (const auto* sig = std::get_if<SigmoidComparison>(&s.comparison))
              c = json{{"kind", "sigmoid"}, {"a", sig->a}, {"b", sig->b}};
            return json{{"family", "interdependent"}, {"eta", s.eta}, {"alpha", s.alpha}, {"comparison", c}};
          },
      },
      spec);
}

UtilitySpec utility_from_json(const json& j) {
  Issues issues;
  const auto spec = parse_utility(j, "utility", issues);
  if (!spec) {
    std::string msg = "invalid utility:";
    for (const auto& e : issues.list) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return *spec;
}

std::vector<UtilitySpec> expand_population(const EconomyConfig& economy) {
  std::vector<UtilitySpec> out;
  out.reserve(economy.n_agents);
  for (const auto& p : economy.population)
    for (std::size_t i = 0; i < p.count; ++i) out.push_back(p.utility);
  return out;
}

std::vector<std::string> config_violations(const ExperimentConfig& c) {
  Issues issues;
  const EconomyConfig& e = c.economy;
  std::size_t total = 0;
  for (const auto& p : e.population) {
    total += p.count;
    if (p.count == 0) issues.add("economy.population", "counts must be positive");
    if (goods_count_of(p.utility) != e.goods_count)
      issues.add("economy.population", family_name(p.utility) + " trades " +
                                           std::to_string(goods_count_of(p.utility)) +
                                           " goods but economy.goods_count is " +
                                           std::to_string(e.goods_count));
  }
  if (total != e.n_agents)
    issues.add("economy.population", "counts sum to " + std::to_string(total) + " but n_agents is " +
                                         std::to_string(e.n_agents));
  if (e.goods_count < 1 || e.goods_count > kMaxGoods) issues.add("economy.goods_count", "must be 1 or 2");
  if (e.n_agents >= 2) {
    try {
      (void)build_encounter_graph(e.topology, e.n_agents);
    } catch (const ConfigError& err) {
      issues.add("economy.topology", err.what());
    }
  } else {
    issues.add("economy.n_agents", "must be at least 2");
  }
  if (c.meter.alphas.size() != e.goods_count) issues.add("meter.alphas", "needs one exponent per good");
  try {
    c.meter.validate();
  } catch (const ConfigError& err) {
    issues.add("meter", err.what());
  }
  try {
    c.protocol.validate();
  } catch (const ConfigError& err) {
    issues.add("protocol", err.what());
  }
  try {
    c.grid.validate();
  } catch (const ConfigError& err) {
    issues.add("grid", err.what());
  }
  if (c.grid.goods_count() != e.goods_count)
    issues.add("grid", "goods axes do not match economy.goods_count");
  for (std::size_t i = 0; i < c.money_line.size(); ++i) {
    if (!(c.money_line[i] > 0.0) || (i > 0 && !(c.money_line[i] > c.money_line[i - 1]))) {
      issues.add("money_line", "values must be positive and strictly increasing");
      break;
    }
  }
  if (c.money_line.size() == 1) issues.add("money_line", "needs at least two values");
  if (c.parallelism == 0) issues.add("parallelism", "must be positive");
  if (c.synthetic) {
    if (!(c.synthetic->noise >= 0.0)) issues.add("synthetic.noise", "must be non-negative");
    if (!(c.synthetic->se_fraction >= 0.0)) issues.add("synthetic.se_fraction", "must be non-negative");
  }

  auto all_of = [&](auto pred) {
    return !e.population.empty() &&
           std::all_of(e.population.begin(), e.population.end(), [&](const auto& p) { return pred(p.utility); });
  };
  switch (c.oracle) {
    case OracleKind::None:
      break;
    case OracleKind::CobbDouglas: {
      const bool ok = e.population.size() == 1 && std::holds_alternative<CobbDouglas>(e.population[0].utility);
      if (!ok) issues.add("oracle", "cobb_douglas needs a single homogeneous Cobb-Douglas population");
      break;
    }
    case OracleKind::HeteroCobbDouglas:
      if (!all_of([](const UtilitySpec& u) { return std::holds_alternative<CobbDouglas>(u); }))
        issues.add("oracle", "hetero_cobb_douglas needs an all Cobb-Douglas population");
      break;
    case OracleKind::FreeEnergy:
      if (!all_of([](const UtilitySpec& u) {
            return std::holds_alternative<CobbDouglas>(u) || std::holds_alternative<Substitutes>(u) ||
                   std::holds_alternative<Complements>(u);
          }))
        issues.add("oracle", "free_energy needs Cobb-Douglas, substitutes or complements agents");
      break;
    case OracleKind::InterdependentExp:
      if (!(e.population.size() == 1 && std::holds_alternative<Interdependent>(e.population[0].utility) &&
            std::holds_alternative<ExpComparison>(std::get<Interdependent>(e.population[0].utility).comparison)))
        issues.add("oracle", "interdependent_exp needs a homogeneous exponential-comparison population");
      break;
    case OracleKind::PriceBandCd: {
      bool ok = e.population.size() == 1 && std::holds_alternative<PriceBandSeparable>(e.population[0].utility);
      if (!ok) issues.add("oracle", "price_band_cd needs identical-threshold separable price-band agents");
      break;
    }
  }
  return issues.list;
}

ExperimentConfig config_from_json(const json& j) {
  Issues issues;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("invalid config:\n  - top level must be a JSON object");
  check_keys(j, "config",
             {"name", "economy", "meter", "protocol", "grid", "money_line", "oracle", "sampler",
              "synthetic", "seed", "parallelism", "output_dir"},
             issues);
  if (j.contains("name")) {
    if (j.at("name").is_string()) c.name = j.at("name").get<std::string>();
    else issues.add("config.name", "must be a string");
  }
  if (!j.contains("seed")) {
    issues.add("config.seed", "missing (a seed is mandatory)");
  } else if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0)) {
    issues.add("config.seed", "must be a non-negative 64-bit integer");
  } else {
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.parallelism = count(j, "parallelism", "config", issues, 1).value_or(1);
  if (j.contains("output_dir")) {
    if (j.at("output_dir").is_string()) c.output_dir = j.at("output_dir").get<std::string>();
    else issues.add("config.output_dir", "must be a string");
  }

  // economy
  if (!j.contains("economy") || !j.at("economy").is_object()) {
    issues.add("config.economy", "missing");
  } else {
    const json& e = j.at("economy");
    check_keys(e, "economy", {"n_agents", "goods_count", "population", "topology", "totals"}, issues);
    c.economy.n_agents = count(e, "n_agents", "economy", issues).value_or(0);
    c.economy.goods_count = count(e, "goods_count", "economy", issues).value_or(0);
    if (!e.contains("population") || !e.at("population").is_array() || e.at("population").empty()) {
      issues.add("economy.population", "must be a non-empty list of {count, utility}");
    } else {
      std::size_t i = 0;
      for (const auto& p : e.at("population")) {
        const std::string path = "economy.population[" + std::to_string(i++) + "]";
        check_keys(p, path, {"count", "utility"}, issues);
        const auto n = count(p, "count", path, issues);
        if (!p.is_object() || !p.contains("utility")) {
          issues.add(path + ".utility", "missing");
          continue;
        }
        const auto u = parse_utility(p.at("utility"), path + ".utility", issues);
        if (n && u) c.economy.population.push_back({*n, *u});
      }
    }
    if (e.contains("topology")) {
      if (auto t = parse_topology(e.at("topology"), "economy.topology", issues)) c.economy.topology = *t;
    }
    if (!e.contains("totals") || !e.at("totals").is_object()) {
      issues.add("economy.totals", "missing");
    } else {
      const json& t = e.at("totals");
      check_keys(t, "economy.totals", {"money", "goods"}, issues);
      c.economy.totals.money = number(t, "money", "economy.totals", issues).value_or(0.0);
      const auto goods = t.contains("goods") ? number_list(t.at("goods"), "economy.totals.goods", issues)
                                             : std::vector<double>{};
      if (goods.size() != c.economy.goods_count)
        issues.add("economy.totals.goods", "needs one amount per good");
      for (std::size_t g = 0; g < goods.size() && g < kMaxGoods; ++g) c.economy.totals.goods[g] = goods[g];
      if (!(c.economy.totals.money > 0.0)) issues.add("economy.totals.money", "must be positive");
      for (double g : goods)
        if (!(g > 0.0)) issues.add("economy.totals.goods", "amounts must be positive");
    }
  }

  // meter
  if (j.contains("meter")) {
    const json& m = j.at("meter");
    check_keys(m, "meter", {"n_agents", "eta", "alphas", "initial"}, issues);
    c.meter.n_agents = count(m, "n_agents", "meter", issues, c.meter.n_agents).value_or(c.meter.n_agents);
    c.meter.eta = number(m, "eta", "meter", issues, c.meter.eta).value_or(c.meter.eta);
    if (m.contains("alphas")) c.meter.alphas = number_list(m.at("alphas"), "meter.alphas", issues);
    if (m.contains("initial")) {
      const json& h = m.at("initial");
      Holdings init;
      init.money = number(h, "money", "meter.initial", issues).value_or(0.0);
      const auto goods = h.contains("goods") ? number_list(h.at("goods"), "meter.initial.goods", issues)
                                             : std::vector<double>{};
      for (std::size_t g = 0; g < goods.size() && g < kMaxGoods; ++g) init.goods[g] = goods[g];
      c.meter.initial_per_agent = init;
    }
  } else {
    c.meter.alphas.assign(c.economy.goods_count, 2.0);
  }

  // protocol
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    MeasurementProtocol& q = c.protocol;
    check_keys(p, "protocol", {"burn_in_sweeps", "n_samples", "sample_stride_sweeps", "cross_rate", "n_batches",
                                    "meter_price_gates"}, issues);
    q.burn_in_sweeps = count(p, "burn_in_sweeps", "protocol", issues, q.burn_in_sweeps).value_or(q.burn_in_sweeps);
    q.n_samples = count(p, "n_samples", "protocol", issues, q.n_samples).value_or(q.n_samples);
    q.sample_stride_sweeps =
        count(p, "sample_stride_sweeps", "protocol", issues, q.sample_stride_sweeps).value_or(q.sample_stride_sweeps);
    q.cross_rate = number(p, "cross_rate", "protocol", issues, q.cross_rate).value_or(q.cross_rate);
    q.n_batches = count(p, "n_batches", "protocol", issues, q.n_batches).value_or(q.n_batches);
    if (p.contains("meter_price_gates")) {
      if (p.at("meter_price_gates").is_boolean()) q.meter_price_gates = p.at("meter_price_gates").get<bool>();
      else issues.add("protocol.meter_price_gates", "must be a boolean");
    }
  }

  // grid; unspecified axes fall back to the economy totals
  {
    const json g = j.contains("grid") ? j.at("grid") : json::object();
    check_keys(g, "grid", {"money", "goods1", "goods2", "reference_node", "reference_entropy"}, issues);
    c.grid.money = g.contains("money") ? parse_axis(g.at("money"), "grid.money", issues)
                                       : std::vector<double>{c.economy.totals.money};
    c.grid.goods1 = g.contains("goods1") ? parse_axis(g.at("goods1"), "grid.goods1", issues)
                                         : std::vector<double>{c.economy.totals.goods[0]};
    if (g.contains("goods2")) c.grid.goods2 = parse_axis(g.at("goods2"), "grid.goods2", issues);
    else if (c.economy.goods_count == 2) c.grid.goods2 = {c.economy.totals.goods[1]};
    if (g.contains("reference_node")) {
      const auto r = number_list(g.at("reference_node"), "grid.reference_node", issues);
      if (r.size() != 3) issues.add("grid.reference_node", "needs three indices (money, goods1, goods2)");
      for (std::size_t d = 0; d < r.size() && d < 3; ++d) {
        if (r[d] < 0 || r[d] != std::floor(r[d])) issues.add("grid.reference_node", "indices must be non-negative integers");
        else c.grid.reference_node[d] = static_cast<std::size_t>(r[d]);
      }
    }
    c.grid.reference_entropy = number(g, "reference_entropy", "grid", issues, 0.0).value_or(0.0);
  }

  if (j.contains("money_line")) c.money_line = parse_axis(j.at("money_line"), "money_line", issues);

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    const auto k = o.is_string() ? parse_oracle(o.get<std::string>()) : std::nullopt;
    if (!k)
      issues.add("config.oracle",
                 "must be one of none, cobb_douglas, hetero_cobb_douglas, free_energy, interdependent_exp, price_band_cd");
    else c.oracle = *k;
  }

  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    SamplerPolicy& p = c.sampler;
    check_keys(s, "sampler",
               {"max_tries", "metropolis_steps", "probes_per_axis", "envelope_safety", "boundary_shave",
                "exploit_structure", "band_mode"},
               issues);
    p.max_tries = static_cast<int>(count(s, "max_tries", "sampler", issues, 200).value_or(200));
    p.metropolis_steps = static_cast<int>(count(s, "metropolis_steps", "sampler", issues, 50).value_or(50));
    p.probes_per_axis = static_cast<int>(count(s, "probes_per_axis", "sampler", issues, 16).value_or(16));
    p.envelope_safety = number(s, "envelope_safety", "sampler", issues, 2.0).value_or(2.0);
    p.boundary_shave = number(s, "boundary_shave", "sampler", issues, 1e-6).value_or(1e-6);
    if (s.contains("exploit_structure")) {
      if (s.at("exploit_structure").is_boolean()) p.exploit_structure = s.at("exploit_structure").get<bool>();
      else issues.add("sampler.exploit_structure", "must be a boolean");
    }
    if (s.contains("band_mode")) {
      const json& b = s.at("band_mode");
      if (b == "reject_trade") p.band_mode = PriceBandMode::RejectTrade;
      else if (b == "conditional") p.band_mode = PriceBandMode::Conditional;
      else issues.add("sampler.band_mode", "must be \"reject_trade\" or \"conditional\"");
    }
    if (p.max_tries < 1) issues.add("sampler.max_tries", "must be positive");
    if (p.probes_per_axis < 2) issues.add("sampler.probes_per_axis", "must be at least 2");
    if (!(p.envelope_safety >= 1.0)) issues.add("sampler.envelope_safety", "must be at least 1");
    if (!(p.boundary_shave >= 0.0 && p.boundary_shave < 0.5)) issues.add("sampler.boundary_shave", "must lie in [0, 0.5)");
  }

  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    check_keys(s, "synthetic", {"noise", "se_fraction"}, issues);
    SyntheticReadings syn;
    syn.noise = number(s, "noise", "synthetic", issues, 0.0).value_or(0.0);
    syn.se_fraction = number(s, "se_fraction", "synthetic", issues, syn.noise).value_or(syn.noise);
    c.synthetic = syn;
  }

  // Semantic checks tolerate a partially parsed config, so both kinds of
  // problem are reported together.
  for (auto& v : config_violations(c)) issues.list.push_back(std::move(v));
  if (!issues.list.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : issues.list) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json pop = json::array();
  for (const auto& p : c.economy.population) pop.push_back({{"count", p.count}, {"utility", utility_to_json(p.utility)}});
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["parallelism"] = c.parallelism;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["economy"] = {{"n_agents", c.economy.n_agents},
                  {"goods_count", c.economy.goods_count},
                  {"population", pop},
                  {"topology", topology_to_json(c.economy.topology)},
                  {"totals", totals_to_json(c.economy.totals, c.economy.goods_count)}};
  j["meter"] = {{"n_agents", c.meter.n_agents}, {"eta", c.meter.eta}, {"alphas", c.meter.alphas}};
  if (c.meter.initial_per_agent) j["meter"]["initial"] = totals_to_json(*c.meter.initial_per_agent, c.economy.goods_count);
  j["protocol"] = {{"burn_in_sweeps", c.protocol.burn_in_sweeps},
                   {"n_samples", c.protocol.n_samples},
                   {"sample_stride_sweeps", c.protocol.sample_stride_sweeps},
                   {"cross_rate", c.protocol.cross_rate},
                   {"n_batches", c.protocol.n_batches},
                   {"meter_price_gates", c.protocol.meter_price_gates}};
  j["grid"] = {{"money", c.grid.money},
               {"goods1", c.grid.goods1},
               {"reference_node", c.grid.reference_node},
               {"reference_entropy", c.grid.reference_entropy}};
  if (!c.grid.goods2.empty()) j["grid"]["goods2"] = c.grid.goods2;
  if (!c.money_line.empty()) j["money_line"] = c.money_line;
  j["oracle"] = oracle_name(c.oracle);
  j["sampler"] = {{"max_tries", c.sampler.max_tries},
                  {"metropolis_steps", c.sampler.metropolis_steps},
                  {"probes_per_axis", c.sampler.probes_per_axis},
                  {"envelope_safety", c.sampler.envelope_safety},
                  {"boundary_shave", c.sampler.boundary_shave},
                  {"exploit_structure", c.sampler.exploit_structure},
                  {"band_mode", c.sampler.band_mode == PriceBandMode::RejectTrade ? "reject_trade" : "conditional"}};
  if (c.synthetic) j["synthetic"] = {{"noise", c.synthetic->noise}, {"se_fraction", c.synthetic->se_fraction}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override \"" + assignment + "\" must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override key \"" + key + "\" has an empty component");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override key \"" + key + "\" descends into a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("override key \"" + key + "\" descends into a non-object");
  (*node)[parts.back()] = value;
}

}  // namespace econcal
