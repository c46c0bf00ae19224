#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "econcal/calorimetry.hpp"
#include "econcal/graph.hpp"
#include "econcal/meter.hpp"
#include "econcal/sampler.hpp"
#include "econcal/utility.hpp"

namespace econcal {

struct PopulationEntry {
  std::size_t count = 0;
  UtilitySpec utility;
};

struct EconomyConfig {
  std::size_t n_agents = 0;
  std::size_t goods_count = 0;
  std::vector<PopulationEntry> population;
  Topology topology = CompleteTopology{};
  /// Totals used for any grid axis left unspecified.
  Totals totals{};
};

enum class OracleKind : std::uint8_t {
  None,
  CobbDouglas,
  HeteroCobbDouglas,
  FreeEnergy,
  InterdependentExp,
  PriceBandCd,
};

/// Replaces simulation by exact Cobb-Douglas values with iid relative noise.
struct SyntheticReadings {
  double noise = 0.0;
  double se_fraction = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EconomyConfig economy;
  MeterSpec meter;
  MeasurementProtocol protocol;
  MacroGrid grid;
  /// Money values for the pure-money check, goods held at the reference node.
  std::vector<double> money_line;
  OracleKind oracle = OracleKind::None;
  SamplerPolicy sampler;
  std::optional<SyntheticReadings> synthetic;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::string output_dir;
};

/// Parses and validates; throws ConfigError listing every violation found.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Semantic checks on an already parsed config; empty when valid.
std::vector<std::string> config_violations(const ExperimentConfig& config);

/// Applies "a.b.c=value" to the JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise. Throws ConfigError on
/// malformed input.
void apply_override(nlohmann::json& doc, const std::string& assignment);

std::vector<UtilitySpec> expand_population(const EconomyConfig& economy);

nlohmann::json utility_to_json(const UtilitySpec& spec);
UtilitySpec utility_from_json(const nlohmann::json& j);
std::string oracle_name(OracleKind kind);

}  // namespace econcal
