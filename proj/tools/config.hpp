#ifndef LEQG_TOOLS_CONFIG_HPP_
#define LEQG_TOOLS_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <leqg/errors.hpp>
#include <leqg/system.hpp>

namespace leqg::cli {

/// Configuration problem: unreadable document, missing or invalid field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SweepSpec {
  std::vector<int> n;
  std::vector<double> theta;
  std::vector<double> epsilon;
  std::vector<std::string> modes;  // "perfect" | "imperfect"
  bool with_mc = false;
};

struct SimOptions {
  double dt = 1e-3;
  double horizon = 50.0;
  int trials = 200;
  std::uint64_t seed = 7;
  std::string evader_mode = "model";  // "model" | "frozen"
};

struct TrajectoryOptions {
  int n = 4;
  std::optional<double> theta;  // risk magnitude; default 0.8 * theta*(n)
  double spacing = 1.0;
  std::string measurement = "perfect";
  std::string evader = "frozen";
  double horizon = 10.0;
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";  // "csv" | "json"
};

struct ExperimentConfig {
  SystemSpec system;
  SweepSpec sweep;
  SimOptions sim;
  TrajectoryOptions trajectories;
  OutputSpec output;
};

/// parse(render(config)) == config (losslessly; doubles round-trip exactly).
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json render_config(const ExperimentConfig& config);

/// The recurring integrator example, with the headline sweep
/// (theta = 0.97, epsilon in {0, 0.1}, n = 1..8, perfect measurements).
ExperimentConfig basic_preset();

/// Resolves --preset/--config: the file document is overlaid onto the
/// preset (JSON merge patch) when both are given.
ExperimentConfig load_config(const std::optional<std::string>& preset,
                             const std::optional<std::string>& config_path);

/// Stable FNV-1a hash of the rendered document, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace leqg::cli

#endif  // LEQG_TOOLS_CONFIG_HPP_
