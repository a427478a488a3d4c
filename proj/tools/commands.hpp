#ifndef LEQG_TOOLS_COMMANDS_HPP_
#define LEQG_TOOLS_COMMANDS_HPP_

#include <string>

#include "config.hpp"

namespace leqg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAboveCritical = 3;
inline constexpr int kExitNumerical = 4;

/// Synthesizes one controller and writes gains, GARE solutions, costs and
/// diagnostics as JSON (stdout and <out>/synth.json).
int cmd_synth(const ExperimentConfig& config, int n, double theta,
              const std::string& measurement);

/// Cost-per-agent sweep over the configured (n, theta, epsilon, mode)
/// grid. Columns: n,theta,epsilon,mode,analytic_cost,mc_cost,mc_stderr,status.
int cmd_sweep_n(const ExperimentConfig& config);

/// Critical-parameter curve over the configured n range at the first
/// configured epsilon. Columns: n,theta_star,theta_I_star.
int cmd_theta_star(const ExperimentConfig& config);

/// Closed-loop trajectory files for one of risk_averse | risk_neutral |
/// risk_seeking, or "all". Columns: t,agent,dim,x,u; plus a run manifest.
int cmd_trajectories(const ExperimentConfig& config, const std::string& mode);

/// Full argv entry point (parsing, config resolution, error-to-exit-code
/// mapping). Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace leqg::cli

#endif  // LEQG_TOOLS_COMMANDS_HPP_
