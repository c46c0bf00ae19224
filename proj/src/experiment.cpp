#include "econcal/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {

const char* const kToolVersion = "0.1.0";

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Stream offset that keeps money-line nodes independent of grid nodes.
constexpr std::uint64_t kMoneyLineSalt = 0x6d6f6e65796c696eULL;

std::vector<AgentExponents> cd_exponents(const EconomyConfig& e) {
  std::vector<AgentExponents> out;
  for (const auto& p : e.population) {
    const auto* cd = std::get_if<CobbDouglas>(&p.utility);
    if (!cd) throw ConfigError("this operation needs an all Cobb-Douglas population");
    for (std::size_t i = 0; i < p.count; ++i) out.push_back({cd->eta, cd->alphas});
  }
  return out;
}

std::vector<double> goods_vector(const Totals& t, std::size_t goods_count) {
  return {t.goods.begin(), t.goods.begin() + static_cast<std::ptrdiff_t>(goods_count)};
}

ReadingField synthetic_readings(const ExperimentConfig& c, const MacroGrid& grid, std::uint64_t seed) {
  const auto agents = cd_exponents(c.economy);
  const std::size_t gc = c.economy.goods_count;
  double eta = 0.0;
  std::vector<double> alpha(gc, 0.0);
  for (const auto& a : agents) {
    eta += a.eta;
    for (std::size_t j = 0; j < gc; ++j) alpha[j] += a.alphas[j];
  }
  const SyntheticReadings syn = c.synthetic.value_or(SyntheticReadings{});
  ReadingField field;
  field.grid = grid;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    Rng rng = derive_stream(seed, k);
    std::normal_distribution<double> z;
    MeterReading r;
    r.macro_state = grid.totals_at(k);
    r.n_samples = 1;
    const double beta = eta / r.macro_state.money;
    r.beta = beta * (1.0 + syn.noise * z(rng));
    r.se_beta = syn.se_fraction * beta;
    for (std::size_t j = 0; j < gc; ++j) {
      const double nu = alpha[j] / r.macro_state.goods[j];
      r.nu.push_back(nu * (1.0 + syn.noise * z(rng)));
      r.se_nu.push_back(syn.se_fraction * nu);
    }
    field.readings.push_back(std::move(r));
  }
  return field;
}

ReadingField measure(const ExperimentConfig& c, const MacroGrid& grid, std::uint64_t seed) {
  if (c.synthetic) return synthetic_readings(c, grid, seed);
  return grid_sweep(economy_factory(c.economy), grid, c.meter, c.protocol, seed, c.parallelism, c.sampler);
}

json concavity_json(const ConcavityReport& r) {
  return {{"pass", r.pass},
          {"worst_eigenvalue", r.worst_eigenvalue},
          {"worst_node", r.worst_node},
          {"interior_nodes", r.interior_nodes},
          {"tolerance", r.tolerance}};
}

json sampler_json(const SamplerStats& s) {
  return {{"outcomes", s.outcomes},
          {"no_trades", s.no_trades},
          {"band_refusals", s.band_refusals},
          {"metropolis_fallbacks", s.metropolis_fallbacks},
          {"metropolis_stalls", s.metropolis_stalls},
          {"envelope_violations", s.envelope_violations}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

EconomyFactory economy_factory(const EconomyConfig& economy) {
  return [economy](const Totals& totals) {
    return make_economy(expand_population(economy), economy.topology, totals, economy.goods_count);
  };
}

FreeEnergySpec free_energy_of(const EconomyConfig& economy) {
  FreeEnergySpec spec;
  for (const auto& p : economy.population) {
    FreeEnergyComponent c;
    c.count = p.count;
    if (const auto* cd = std::get_if<CobbDouglas>(&p.utility)) c.family = CdFree{cd->eta, cd->alphas};
    else if (const auto* s = std::get_if<Substitutes>(&p.utility)) c.family = SubstitutesFree{s->eta, s->alpha};
    else if (const auto* m = std::get_if<Complements>(&p.utility)) c.family = ComplementsFree{m->eta, m->alpha};
    else throw ConfigError("free energy is known only for Cobb-Douglas, substitutes and complements agents");
    spec.components.push_back(std::move(c));
  }
  spec.validate();
  return spec;
}

std::optional<std::vector<double>> oracle_surface(const ExperimentConfig& c, const EntropyField& field) {
  const EconomyConfig& e = c.economy;
  const std::size_t gc = e.goods_count;
  std::vector<double> out;
  switch (c.oracle) {
    case OracleKind::None:
      return std::nullopt;
    case OracleKind::CobbDouglas: {
      const auto& cd = std::get<CobbDouglas>(e.population.front().utility);
      for (const auto& r : field.readings)
        out.push_back(cd_entropy(e.n_agents, cd.eta, cd.alphas, r.macro_state.money, goods_vector(r.macro_state, gc)));
      break;
    }
    case OracleKind::HeteroCobbDouglas: {
      const auto agents = cd_exponents(e);
      for (const auto& r : field.readings)
        out.push_back(hetero_cd_entropy(agents, r.macro_state.money, goods_vector(r.macro_state, gc)));
      break;
    }
    case OracleKind::FreeEnergy:
      out = free_energy_comparison_surface(free_energy_of(e), field.readings);
      break;
    case OracleKind::InterdependentExp: {
      const auto& u = std::get<Interdependent>(e.population.front().utility);
      for (const auto& r : field.readings)
        out.push_back(interdependent_exp_entropy(e.n_agents, u.eta, u.alpha, r.macro_state.money, r.macro_state.goods[0]));
      break;
    }
    case OracleKind::PriceBandCd: {
      const auto& u = std::get<PriceBandSeparable>(e.population.front().utility);
      for (const auto& r : field.readings)
        out.push_back(price_band_cd_equivalence_oracle(e.n_agents, u.eta, u.alpha, r.macro_state.money,
                                                       r.macro_state.goods[0]));
      break;
    }
  }
  return out;
}

ReadingField synthetic_field(const ExperimentConfig& config) {
  return synthetic_readings(config, config.grid, config.seed);
}

ExperimentResult run_pipeline(const ExperimentConfig& c) {
  ExperimentResult res;
  const ReadingField readings = measure(c, c.grid, c.seed);
  res.sampler = readings.stats;
  res.field = fit_entropy(readings);
  res.concavity = concavity_check(res.field);
  res.oracle_S = oracle_surface(c, res.field);
  if (res.oracle_S) res.goodness_of_agreement = goodness_of_agreement(res.field.fitted_S, *res.oracle_S);

  if (c.oracle == OracleKind::InterdependentExp) {
    const double alpha = std::get<Interdependent>(c.economy.population.front().utility).alpha;
    NuCheck nc;
    for (const auto& r : res.field.readings) {
      const double exact = 1.0 + alpha * static_cast<double>(c.economy.n_agents) / r.macro_state.goods[0];
      const double rel = (r.nu[0] - exact) / exact;
      nc.mean_square_relative_error += rel * rel;
      if (r.se_nu[0] > 0.0) nc.max_abs_z = std::max(nc.max_abs_z, std::abs(r.nu[0] - exact) / r.se_nu[0]);
    }
    nc.mean_square_relative_error /= static_cast<double>(res.field.readings.size());
    res.nu_check = nc;
  }

  if (!c.money_line.empty()) {
    // Goods grid: nodes at the reference money value.
    ReadingField goods_grid;
    goods_grid.grid = c.grid;
    for (std::size_t k = 0; k < c.grid.node_count(); ++k)
      if (c.grid.node_index(k)[0] == c.grid.reference_node[0]) goods_grid.readings.push_back(res.field.readings[k]);
    MacroGrid line;
    line.money = c.money_line;
    line.goods1 = {c.grid.goods1[c.grid.reference_node[1]]};
    if (!c.grid.goods2.empty()) line.goods2 = {c.grid.goods2[c.grid.reference_node[2]]};
    const ReadingField money_line = measure(c, line, mix64(c.seed ^ kMoneyLineSalt));
    res.sampler += money_line.stats;
    res.pure_money = pure_money_check(goods_grid, money_line);
  }
  return res;
}

json stats_json(const ExperimentConfig& c, const ExperimentResult& r) {
  json j;
  j["name"] = c.name;
  j["nodes"] = r.field.grid.node_count();
  j["flagged_nodes"] = r.field.flagged;
  j["rss"] = r.field.rss;
  j["tss"] = r.field.tss;
  j["goodness_of_fit"] = r.field.goodness_of_fit;
  j["oracle"] = oracle_name(c.oracle);
  j["goodness_of_agreement"] = r.goodness_of_agreement ? json(*r.goodness_of_agreement) : json(nullptr);
  j["concavity"] = concavity_json(r.concavity);
  if (r.pure_money) {
    const PureMoneyReport& p = *r.pure_money;
    j["pure_money"] = {{"max_rel_beta_variation", p.max_rel_beta_variation},
                       {"max_beta_z", p.max_beta_z},
                       {"goods_slopes", p.goods_slopes},
                       {"goods_slope_se", p.goods_slope_se},
                       {"goods_independent", p.goods_independent()},
                       {"money_value_exponent", p.money_value_exponent},
                       {"money_value_exponent_se", p.money_value_exponent_se}};
  } else {
    j["pure_money"] = nullptr;
  }
  if (r.nu_check)
    j["nu_check"] = {{"mean_square_relative_error", r.nu_check->mean_square_relative_error},
                     {"max_abs_z", r.nu_check->max_abs_z}};
  double drift = 0.0;
  for (const auto& m : r.field.readings) drift = std::max(drift, m.max_total_drift);
  j["max_total_drift"] = drift;
  j["sampler"] = sampler_json(r.sampler);
  return j;
}

std::string field_csv(const ExperimentResult& r) {
  std::ostringstream s;
  s << "M,G1,G2,beta,se_beta,nu1,se_nu1,nu2,se_nu2,S_fit,S_oracle\n";
  const bool two = r.field.grid.goods_count() == 2;
  for (std::size_t k = 0; k < r.field.readings.size(); ++k) {
    const MeterReading& m = r.field.readings[k];
    s << fmt(m.macro_state.money) << ',' << fmt(m.macro_state.goods[0]) << ',';
    if (two) s << fmt(m.macro_state.goods[1]);
    s << ',' << fmt(m.beta) << ',' << fmt(m.se_beta) << ',' << fmt(m.nu[0]) << ',' << fmt(m.se_nu[0]) << ',';
    if (two) s << fmt(m.nu[1]) << ',' << fmt(m.se_nu[1]);
    else s << ',';
    s << ',' << fmt(r.field.fitted_S[k]) << ',';
    if (r.oracle_S) s << fmt((*r.oracle_S)[k]);
    s << '\n';
  }
  return s.str();
}

std::string field_long_csv(const ExperimentResult& r) {
  std::ostringstream s;
  s << "node,M,G1,G2,quantity,value,se\n";
  const bool two = r.field.grid.goods_count() == 2;
  for (std::size_t k = 0; k < r.field.readings.size(); ++k) {
    const MeterReading& m = r.field.readings[k];
    std::ostringstream prefix;
    prefix << k << ',' << fmt(m.macro_state.money) << ',' << fmt(m.macro_state.goods[0]) << ','
           << (two ? fmt(m.macro_state.goods[1]) : std::string()) << ',';
    const std::string p = prefix.str();
    s << p << "beta," << fmt(m.beta) << ',' << fmt(m.se_beta) << '\n';
    for (std::size_t j = 0; j < m.nu.size(); ++j)
      s << p << "nu" << j + 1 << ',' << fmt(m.nu[j]) << ',' << fmt(m.se_nu[j]) << '\n';
    s << p << "S_fit," << fmt(r.field.fitted_S[k]) << ",\n";
    if (r.oracle_S) s << p << "S_oracle," << fmt((*r.oracle_S)[k]) << ",\n";
  }
  return s.str();
}

RunManifest run_experiment(const ExperimentConfig& config, const std::string& output_dir) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + output_dir + ": " + ec.message());

  const ExperimentResult result = run_pipeline(config);
  const json stats = stats_json(config, result);
  const fs::path dir(output_dir);
  write_file(dir / "field.csv", field_csv(result));
  write_file(dir / "field_long.csv", field_long_csv(result));
  write_file(dir / "stats.json", stats.dump(2) + "\n");

  json flagged = json::array();
  for (std::size_t k = 0; k < result.field.readings.size(); ++k)
    if (result.field.readings[k].flagged) flagged.push_back(k);
  RunManifest m;
  m.output_dir = output_dir;
  m.document = {{"tool", "econcal"},
                {"tool_version", kToolVersion},
                {"started_at", started},
                {"wall_clock_seconds",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                {"config", config_to_json(config)},
                {"flagged_node_count", flagged.size()},
                {"flagged_nodes", flagged},
                {"stats", stats},
                {"artifacts", {"field.csv", "field_long.csv", "stats.json"}}};
  write_file(dir / "manifest.json", m.document.dump(2) + "\n");
  return m;
}

}  // namespace econcal
