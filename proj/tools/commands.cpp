#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <leqg/errors.hpp>
#include <leqg/simulate.hpp>
#include <leqg/structured.hpp>
#include <leqg/synthesis.hpp>
#include <leqg/version.hpp>

namespace leqg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_cell(const json& v) {
  if (v.is_null()) {
    return "";
  }
  if (v.is_string()) {
    return v.get<std::string>();
  }
  return v.dump();
}

// Writes a table as CSV (comment line with version + config hash, then a
// fixed header) or as a JSON document mirroring the columns as fields.
// Returns the file path.
fs::path write_table(const ExperimentConfig& cfg, const std::string& name,
                     const std::string& command,
                     const std::vector<std::string>& columns,
                     const std::vector<json>& rows) {
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  const std::string hash = config_hash(cfg);

  if (cfg.output.format == "csv") {
    const fs::path path = dir / (name + ".csv");
    std::ofstream out(path);
    out << "# leqg " << kVersion << " config=" << hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out << (i == 0 ? "" : ",") << columns[i];
    }
    out << "\n";
    for (const json& row : rows) {
      for (std::size_t i = 0; i < columns.size(); ++i) {
        out << (i == 0 ? "" : ",") << csv_cell(row.at(columns[i]));
      }
      out << "\n";
    }
    return path;
  }

  const fs::path path = dir / (name + ".json");
  json doc{{"version", kVersion},
           {"config_hash", hash},
           {"command", command},
           {"columns", columns},
           {"rows", rows}};
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  return path;
}

EvaderMode evader_mode_from(const std::string& name) {
  return name == "frozen" ? EvaderMode::kFrozen : EvaderMode::kModel;
}

SimConfig sim_config_from(const SimOptions& sim) {
  SimConfig cfg;
  cfg.dt = sim.dt;
  cfg.horizon = sim.horizon;
  cfg.trials = sim.trials;
  cfg.seed = sim.seed;
  cfg.evader_mode = evader_mode_from(sim.evader_mode);
  return cfg;
}

json gare_diagnostics(const GareSolution& sol) {
  return json{{"residual_norm", sol.residual_norm},
              {"min_eigenvalue", sol.min_eigenvalue},
              {"closed_loop_spectral_abscissa",
               sol.closed_loop_spectral_abscissa}};
}

// ---- sweep-n -------------------------------------------------------------

struct SweepCell {
  int n = 0;
  double theta = 0.0;
  double epsilon = 0.0;
  std::string mode;
};

json eval_sweep_row(const ExperimentConfig& cfg, const SweepCell& cell,
                    std::uint64_t row_seed) {
  json row{{"n", cell.n},          {"theta", cell.theta},
           {"epsilon", cell.epsilon}, {"mode", cell.mode},
           {"analytic_cost", nullptr}, {"mc_cost", nullptr},
           {"mc_stderr", nullptr},  {"status", "ok"}};
  try {
    const SystemSpec spec = cfg.system.with_epsilon(cell.epsilon);
    const MultiAgentSystem sys = assemble(spec, cell.n);
    SimConfig sim = sim_config_from(cfg.sim);
    sim.seed = row_seed;

    if (cell.mode == "perfect") {
      auto ctl = try_full_info_synthesis(sys, RiskParameter{cell.theta});
      if (!ctl) {
        row["status"] = "above_critical";
        return row;
      }
      row["analytic_cost"] = ctl->cost_per_agent;
      if (cfg.sweep.with_mc) {
        const CostReport mc =
            mc_cost(sys, *ctl, RiskParameter{cell.theta}, sim);
        row["mc_cost"] = mc.mc_estimate;
        row["mc_stderr"] = mc.std_error;
      }
    } else {
      const InitialCondition ic =
          InitialCondition::line_spread(cell.n, spec.d);
      auto ctl =
          try_output_feedback_synthesis(sys, RiskParameter{cell.theta}, ic);
      if (!ctl) {
        row["status"] = "above_critical";
        return row;
      }
      row["analytic_cost"] = ctl->cost_per_agent;
      if (cfg.sweep.with_mc) {
        const CostReport mc =
            mc_cost(sys, *ctl, RiskParameter{cell.theta}, sim);
        row["mc_cost"] = mc.mc_estimate;
        row["mc_stderr"] = mc.std_error;
      }
    }
  } catch (const ThetaAboveCriticalError&) {
    row["status"] = "above_critical";
  } catch (const Error& e) {
    std::cerr << "sweep-n: row (n=" << cell.n << ", theta=" << cell.theta
              << ", eps=" << cell.epsilon << ", " << cell.mode
              << ") failed: " << e.what() << "\n";
    row["status"] = "error";
  }
  return row;
}

}  // namespace

int cmd_synth(const ExperimentConfig& config, int n, double theta,
              const std::string& measurement) {
  const MultiAgentSystem sys = assemble(config.system, n);

  json doc{{"version", kVersion},
           {"config_hash", config_hash(config)},
           {"command", "synth"},
           {"n", n},
           {"theta", theta},
           {"epsilon", config.system.epsilon},
           {"measurement", measurement}};

  try {
    if (measurement == "perfect") {
      const FullInfoController ctl =
          full_info_synthesis(sys, RiskParameter{theta});
      doc["cost_per_agent"] = ctl.cost_per_agent;
      doc["X"] = matrix_json(ctl.X_n.X);
      doc["K"] = matrix_json(ctl.K);
      doc["gare"] = gare_diagnostics(ctl.X_n);
    } else {
      const InitialCondition ic =
          InitialCondition::line_spread(n, config.system.d,
                                        config.trajectories.spacing);
      const OutputFeedbackController ctl =
          output_feedback_synthesis(sys, RiskParameter{theta}, ic);
      doc["cost_per_agent"] = ctl.cost_per_agent;
      doc["X"] = matrix_json(ctl.X_n.X);
      doc["Y"] = matrix_json(ctl.Y_n.X);
      doc["gain"] = matrix_json(ctl.gain);
      doc["filter_A"] = matrix_json(ctl.filter_A);
      doc["filter_L"] = matrix_json(ctl.filter_L);
      doc["M_inv"] = matrix_json(ctl.M_inv);
      doc["control_gare"] = gare_diagnostics(ctl.X_n);
      doc["filter_gare"] = gare_diagnostics(ctl.Y_n);
      doc["sigma0_exceeds_Y"] = ctl.sigma0_exceeds_Y;
      if (ctl.sigma0_exceeds_Y) {
        std::cerr << "synth: warning: Sigma_0 is not dominated by Y_n; the "
                     "controller is unchanged but the optimality claim "
                     "does not apply\n";
      }
    }
  } catch (const ThetaAboveCriticalError& e) {
    double critical = std::numeric_limits<double>::quiet_NaN();
    try {
      critical = measurement == "perfect" ? theta_star_full(sys, 1e-4)
                                          : theta_star_output(sys, 1e-4);
    } catch (const Error&) {
    }
    std::cerr << "synth: " << e.what();
    if (std::isfinite(critical)) {
      std::cerr << "; critical value ~= " << critical;
    }
    std::cerr << "\n";
    return kExitAboveCritical;
  }

  const fs::path dir(config.output.dir);
  fs::create_directories(dir);
  std::ofstream file(dir / "synth.json");
  file << doc.dump(2) << "\n";
  std::cout << doc.dump(2) << std::endl;
  return kExitOk;
}

int cmd_sweep_n(const ExperimentConfig& config) {
  if (config.sweep.n.empty() || config.sweep.theta.empty() ||
      config.sweep.epsilon.empty()) {
    throw ConfigError("sweep: n, theta and epsilon lists must be non-empty");
  }

  std::vector<SweepCell> cells;
  for (const int n : config.sweep.n) {
    for (const double theta : config.sweep.theta) {
      for (const double eps : config.sweep.epsilon) {
        for (const std::string& mode : config.sweep.modes) {
          cells.push_back(SweepCell{n, theta, eps, mode});
        }
      }
    }
  }

  std::vector<json> rows(cells.size());
  // Monte Carlo rows parallelize internally over trials; synthesis-only
  // rows run in a small pool. Output order is the cell order either way.
  if (config.sweep.with_mc) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      rows[i] = eval_sweep_row(config, cells[i], config.sim.seed + i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) {
          return;
        }
        rows[i] = eval_sweep_row(config, cells[i], config.sim.seed + i);
      }
    };
    const unsigned hw = std::max(
        1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                               static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < hw; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  const fs::path path = write_table(
      config, "sweep_n", "sweep-n",
      {"n", "theta", "epsilon", "mode", "analytic_cost", "mc_cost",
       "mc_stderr", "status"},
      rows);
  std::cout << path.string() << std::endl;
  return kExitOk;
}

int cmd_theta_star(const ExperimentConfig& config) {
  if (config.sweep.n.empty() || config.sweep.epsilon.empty()) {
    throw ConfigError("theta-star: sweep.n and sweep.epsilon must be "
                      "non-empty");
  }
  const double eps = config.sweep.epsilon.front();
  constexpr double kTol = 1e-5;

  std::vector<json> rows;
  for (const int n : config.sweep.n) {
    json row{{"n", n}, {"theta_star", nullptr}, {"theta_I_star", nullptr}};
    const SystemSpec spec = config.system.with_epsilon(eps);
    const MultiAgentSystem sys = assemble(spec, n);
    try {
      row["theta_star"] = theta_star_full(sys, kTol);
    } catch (const Error& e) {
      std::cerr << "theta-star: n=" << n << ": " << e.what() << "\n";
    }
    try {
      row["theta_I_star"] = theta_star_output(sys, kTol);
    } catch (const Error& e) {
      std::cerr << "theta-star: n=" << n << " (output feedback): " << e.what()
                << "\n";
    }
    rows.push_back(std::move(row));
  }

  const fs::path path =
      write_table(config, "theta_star", "theta-star",
                  {"n", "theta_star", "theta_I_star"}, rows);
  std::cout << path.string() << std::endl;
  return kExitOk;
}

int cmd_trajectories(const ExperimentConfig& config, const std::string& mode) {
  std::vector<std::string> modes;
  if (mode == "all") {
    modes = {"risk_averse", "risk_neutral", "risk_seeking"};
  } else {
    modes = {mode};
  }

  const TrajectoryOptions& opts = config.trajectories;
  const int n = opts.n;
  const Eigen::Index d = config.system.d;
  const MultiAgentSystem sys = assemble(config.system, n);
  const bool perfect = opts.measurement == "perfect";

  double theta_bar;
  if (opts.theta) {
    theta_bar = *opts.theta;
  } else {
    theta_bar = 0.8 * (perfect ? theta_star_full(sys, 1e-4)
                               : theta_star_output(sys, 1e-4));
  }

  const InitialCondition ic =
      InitialCondition::line_spread(n, d, opts.spacing);

  for (const std::string& m : modes) {
    const double theta = m == "risk_averse"    ? theta_bar
                         : m == "risk_seeking" ? -theta_bar
                                               : 0.0;

    SimConfig sim = sim_config_from(config.sim);
    sim.horizon = opts.horizon;
    sim.trials = 1;
    sim.evader_mode = evader_mode_from(opts.evader);

    Trajectory traj;
    if (perfect) {
      const FullInfoController ctl =
          full_info_synthesis(sys, RiskParameter{theta});
      traj = simulate(sys, ctl, sim, ic.x_bar_0);
    } else {
      const OutputFeedbackController ctl =
          output_feedback_synthesis(sys, RiskParameter{theta}, ic);
      traj = simulate(sys, ctl, sim, ic.x_bar_0);
    }

    const Eigen::Index md = std::max(config.system.d, config.system.m);
    std::vector<json> rows;
    rows.reserve(traj.times.size() * static_cast<std::size_t>(n * md));
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      for (Eigen::Index agent = 0; agent < n; ++agent) {
        for (Eigen::Index dim = 0; dim < md; ++dim) {
          json row{{"t", traj.times[k]},
                   {"agent", agent},
                   {"dim", dim},
                   {"x", nullptr},
                   {"u", nullptr}};
          if (dim < config.system.d) {
            row["x"] = traj.states(agent * config.system.d + dim,
                                   static_cast<Eigen::Index>(k));
          }
          if (dim < config.system.m) {
            row["u"] = traj.controls(agent * config.system.m + dim,
                                     static_cast<Eigen::Index>(k));
          }
          rows.push_back(std::move(row));
        }
      }
    }

    const fs::path table_path = write_table(
        config, "trajectories_" + m, "trajectories",
        {"t", "agent", "dim", "x", "u"}, rows);

    json manifest{{"version", kVersion},
                  {"config_hash", config_hash(config)},
                  {"command", "trajectories"},
                  {"mode", m},
                  {"theta", theta},
                  {"seed", sim.seed},
                  {"files", {table_path.filename().string()}},
                  {"config", render_config(config)}};
    const fs::path manifest_path =
        fs::path(config.output.dir) / ("manifest_" + m + ".json");
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << "\n";

    std::cout << table_path.string() << std::endl;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Risk-sensitive (LEQG) tracking controllers for homogeneous "
               "pursuer groups: synthesis, critical risk parameters, and "
               "simulation experiments"};
  app.require_subcommand(1);

  struct CommonOpts {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::uint64_t> seed;
  };
  auto add_common = [](CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config, "Path to a JSON experiment config");
    sub->add_option("--preset", o.preset, "Built-in preset (basic)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", o.seed, "RNG seed override");
  };
  auto resolve = [](const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o.preset, o.config);
    if (o.out) {
      cfg.output.dir = *o.out;
    }
    if (o.format) {
      cfg.output.format = *o.format;
    }
    if (o.seed) {
      cfg.sim.seed = *o.seed;
    }
    return cfg;
  };

  CommonOpts synth_opts;
  int synth_n = 1;
  double synth_theta = 0.0;
  std::string synth_measurement = "perfect";
  CLI::App* synth = app.add_subcommand(
      "synth", "Synthesize one controller and report gains and costs");
  add_common(synth, synth_opts);
  synth->add_option("--n", synth_n, "Number of agents")->required();
  synth->add_option("--theta", synth_theta, "Risk parameter")->required();
  synth->add_option("--measurement", synth_measurement, "Measurement mode")
      ->check(CLI::IsMember({"perfect", "imperfect"}));

  CommonOpts sweep_opts;
  CLI::App* sweep = app.add_subcommand(
      "sweep-n", "Cost-per-agent sweep over the configured grid");
  add_common(sweep, sweep_opts);

  CommonOpts tstar_opts;
  CLI::App* tstar = app.add_subcommand(
      "theta-star", "Critical risk parameters over the configured n range");
  add_common(tstar, tstar_opts);

  CommonOpts traj_opts;
  std::string traj_mode = "all";
  CLI::App* traj = app.add_subcommand(
      "trajectories", "Closed-loop trajectory files for the three risk modes");
  add_common(traj, traj_opts);
  traj->add_option("--mode", traj_mode, "Risk mode")
      ->check(CLI::IsMember(
          {"risk_averse", "risk_neutral", "risk_seeking", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(resolve(synth_opts), synth_n, synth_theta,
                       synth_measurement);
    }
    if (sweep->parsed()) {
      return cmd_sweep_n(resolve(sweep_opts));
    }
    if (tstar->parsed()) {
      return cmd_theta_star(resolve(tstar_opts));
    }
    if (traj->parsed()) {
      return cmd_trajectories(resolve(traj_opts), traj_mode);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ThetaAboveCriticalError& e) {
    std::cerr << "above critical: " << e.what() << "\n";
    return kExitAboveCritical;
  } catch (const ModelAssumptionError& e) {
    std::cerr << "model assumption violated: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace leqg::cli
