// Command-line runner: econcal run <config> | econcal preset list | econcal preset emit <name>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "econcal/config.hpp"
#include "econcal/errors.hpp"
#include "econcal/experiment.hpp"
#include "econcal/presets.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

// Default parent directory for run outputs when neither the command line nor
// the config names one.
constexpr const char* kOutputRootEnv = "ECONCAL_OUTPUT_ROOT";

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw econcal::IoError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw econcal::ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

std::string resolve_output_dir(const std::string& flag, const econcal::ExperimentConfig& c) {
  if (!flag.empty()) return flag;
  if (!c.output_dir.empty()) return c.output_dir;
  const char* root = std::getenv(kOutputRootEnv);
  return std::string(root && *root ? root : "runs") + "/" + c.name;
}

int run(const std::string& config_path, const std::string& preset, std::optional<std::uint64_t> seed,
        std::optional<std::size_t> parallelism, const std::string& output_dir,
        const std::vector<std::string>& overrides) {
  nlohmann::json doc = preset.empty() ? read_json(config_path) : econcal::emit_preset(preset);
  for (const auto& o : overrides) econcal::apply_override(doc, o);
  if (seed) doc["seed"] = *seed;
  if (parallelism) doc["parallelism"] = *parallelism;
  const econcal::ExperimentConfig config = econcal::config_from_json(doc);
  const std::string dir = resolve_output_dir(output_dir, config);
  const auto manifest = econcal::run_experiment(config, dir);
  const auto& s = manifest.document.at("stats");
  std::cout << "run " << config.name << " -> " << dir << "\n"
            << "  goodness_of_fit       " << s.at("goodness_of_fit") << "\n"
            << "  goodness_of_agreement " << s.at("goodness_of_agreement") << "\n"
            << "  concave               " << s.at("concavity").at("pass") << "\n"
            << "  flagged nodes         " << s.at("flagged_nodes") << "\n"
            << "  wall clock [s]        " << manifest.document.at("wall_clock_seconds") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure economic entropy of simulated exchange economies"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, preset_name, output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::vector<std::string> overrides;
  run_cmd->add_option("config", config_path, "Experiment config (JSON)");
  run_cmd->add_option("--preset", preset_name, "Run a bundled preset instead of a config file");
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--parallelism", parallelism, "Worker threads for grid nodes");
  run_cmd->add_option("--output-dir", output_dir,
                      std::string("Output directory (default: config output_dir, else $") + kOutputRootEnv +
                          "/<name>, else runs/<name>)");
  run_cmd->add_option("--override", overrides, "key.path=value applied to the config (repeatable)");

  auto* preset_cmd = app.add_subcommand("preset", "List or emit bundled configs");
  preset_cmd->require_subcommand(1);
  auto* list_cmd = preset_cmd->add_subcommand("list", "List preset names");
  auto* emit_cmd = preset_cmd->add_subcommand("emit", "Print a preset config");
  std::string emit_name;
  emit_cmd->add_option("name", emit_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) {
      if (config_path.empty() == preset_name.empty()) {
        std::cerr << "error: give exactly one of <config> or --preset\n";
        return kExitConfig;
      }
      return run(config_path, preset_name, seed, parallelism, output_dir, overrides);
    }
    if (*list_cmd) {
      for (const auto& p : econcal::list_presets()) std::cout << p.name << "\t" << p.description << "\n";
      return 0;
    }
    if (*emit_cmd) {
      std::cout << econcal::emit_preset(emit_name).dump(2) << "\n";
      return 0;
    }
  } catch (const econcal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const econcal::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const econcal::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const econcal::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const econcal::DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
