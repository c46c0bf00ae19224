#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "econcal/calorimetry.hpp"
#include "econcal/config.hpp"
#include "econcal/oracles.hpp"

namespace econcal {

/// Fresh economy per macro-state, holdings split equally.
EconomyFactory economy_factory(const EconomyConfig& economy);

/// Free energy of a population of Cobb-Douglas, substitutes and complements
/// agents.
FreeEnergySpec free_energy_of(const EconomyConfig& economy);

/// Measured nu against the exact 1 + alpha / g_bar of exponential-comparison
/// agents.
struct NuCheck {
  double mean_square_relative_error = 0.0;
  double max_abs_z = 0.0;
};

struct ExperimentResult {
  EntropyField field;
  std::optional<std::vector<double>> oracle_S;
  std::optional<double> goodness_of_agreement;
  ConcavityReport concavity;
  std::optional<PureMoneyReport> pure_money;
  std::optional<NuCheck> nu_check;
  SamplerStats sampler;
};

/// Reference entropy at every node, or nullopt without an oracle.
std::optional<std::vector<double>> oracle_surface(const ExperimentConfig& config,
                                                  const EntropyField& field);

/// Readings from exact Cobb-Douglas values with relative noise; used by the
/// synthetic fixture and by tests of the fit.
ReadingField synthetic_field(const ExperimentConfig& config);

/// Measure, fit and diagnose in memory.
ExperimentResult run_pipeline(const ExperimentConfig& config);

nlohmann::json stats_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Fixed header: M,G1,G2,beta,se_beta,nu1,se_nu1,nu2,se_nu2,S_fit,S_oracle.
std::string field_csv(const ExperimentResult& result);
/// One row per node and quantity, for plotting.
std::string field_long_csv(const ExperimentResult& result);

struct RunManifest {
  nlohmann::json document;
  std::string output_dir;
};

/// Runs the pipeline and writes field.csv, field_long.csv, stats.json and
/// manifest.json into `output_dir`, which is created if needed.
RunManifest run_experiment(const ExperimentConfig& config, const std::string& output_dir);

extern const char* const kToolVersion;

}  // namespace econcal
