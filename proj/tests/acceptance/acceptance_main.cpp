// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <leqg/errors.hpp>
#include <leqg/riccati.hpp>
#include <leqg/simulate.hpp>
#include <leqg/structured.hpp>
#include <leqg/synthesis.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using namespace leqg;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& msg) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << msg;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// C1: LQG cost per agent is independent of n (perfect measurements).
void criterion1(Check& c) {
  for (const double eps : {0.0, 0.1}) {
    for (const Eigen::Index d : {1, 2}) {
      const SystemSpec spec = SystemSpec::basic(d, eps);
      const double j1 =
          full_info_synthesis(assemble(spec, 1), RiskParameter{0.0})
              .cost_per_agent;
      double worst = 0.0;
      for (int n = 1; n <= 16; ++n) {
        const double jn =
            full_info_synthesis(assemble(spec, n), RiskParameter{0.0})
                .cost_per_agent;
        worst = std::max(worst, std::abs(jn - j1));
      }
      c.require(worst <= 1e-8, "eps=" + fmt(eps) + " d=" + fmt(d) +
                                   ": max deviation " + fmt(worst));
    }
  }
}

// C2: closed-form n-agent solution equals the dense GARE solve at eps=0.
void criterion2(Check& c) {
  std::mt19937 gen(20240817);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto rand_mat = [&](Eigen::Index r, Eigen::Index q) {
    Matrix m(r, q);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < q; ++j) {
        m(i, j) = u(gen);
      }
    }
    return m;
  };

  for (const Eigen::Index d : {1, 2, 3}) {
    for (int rep = 0; rep < 2; ++rep) {
      const Matrix I = Matrix::Identity(d, d);
      const Matrix A = rand_mat(d, d);
      const Matrix G = rand_mat(d, d) + 0.5 * I;
      const Matrix Mq = rand_mat(d, d);
      const Matrix Mr = rand_mat(d, d);
      const SystemSpec spec(A, I, I, I, G, I,
                            Mq * Mq.transpose() + 0.2 * I,
                            Mr * Mr.transpose() + 0.5 * I, 0.0);

      const double theta = 0.5 * theta_star_full(assemble(spec, 1), 1e-7);
      const double j1 =
          full_info_synthesis(assemble(spec, 1), RiskParameter{theta})
              .cost_per_agent;

      for (const int n : {2, 4, 8}) {
        const StructuredControlSolution closed =
            rs_structured_X(spec, n, RiskParameter{theta});
        const MultiAgentSystem sys = assemble(spec, n);
        const FullInfoController dense =
            full_info_synthesis(sys, RiskParameter{theta});
        const double rel = (dense.X_n.X - closed.assembled()).norm() /
                           std::max(1e-300, dense.X_n.X.norm());
        c.require(rel <= 1e-7, "d=" + fmt(d) + " n=" + fmt(n) +
                                   ": relative error " + fmt(rel));
        c.require(std::abs(dense.cost_per_agent - j1) <= 1e-8,
                  "d=" + fmt(d) + " n=" + fmt(n) + ": cost gap " +
                      fmt(std::abs(dense.cost_per_agent - j1)));
        c.require(std::abs(closed.cost_per_agent - j1) <= 1e-8,
                  "structured cost gap at n=" + fmt(n));
      }
    }
  }
}

// C3: breakpoint at n=4 for theta=0.97, eps=0.1; theta*(n) = n/(n+eps).
void criterion3(Check& c) {
  const SystemSpec spec = SystemSpec::basic(1, 0.1);
  for (int n = 1; n <= 8; ++n) {
    const MultiAgentSystem sys = assemble(spec, n);
    const bool ok =
        try_full_info_synthesis(sys, RiskParameter{0.97}).has_value();
    c.require(ok == (n >= 4),
              "n=" + fmt(n) + ": synthesis " + (ok ? "succeeded" : "failed"));
    const double ts = theta_star_full(sys, 1e-5);
    const double expected = static_cast<double>(n) / (n + 0.1);
    c.require(std::abs(ts - expected) <= 1e-4,
              "n=" + fmt(n) + ": theta* " + fmt(ts) + " vs " + fmt(expected));
  }
}

// C4: theta*(n) stays at 1 for eps=0.
void criterion4(Check& c) {
  const SystemSpec spec = SystemSpec::basic(1, 0.0);
  for (int n = 1; n <= 8; ++n) {
    const double ts = theta_star_full(assemble(spec, n), 1e-4);
    c.require(std::abs(ts - 1.0) <= 1e-3,
              "n=" + fmt(n) + ": theta* = " + fmt(ts));
  }
}

// C5: output-feedback LQG cost approaches Tr(W X1) at rate 1/sqrt(n).
void criterion5(Check& c) {
  const double eps = 1e-6;
  const SystemSpec spec = SystemSpec::basic(1, eps);

  const Matrix X1 = lqg_structured_X(spec, 1).X_tilde_1;
  const double tr_WX1 = (spec.W * X1).trace();
  const Matrix Y1 =
      rs_structured_filter_Y(spec, 1, RiskParameter{0.0}).Y_tilde_1n;
  const double tr_Y1Q = (Y1 * spec.Q).trace();

  for (const int n : {4, 16, 64}) {
    const Matrix Yt =
        rs_structured_filter_Y(spec, n, RiskParameter{0.0}).Y_tilde_1n;
    const double j_struct =
        (Yt * spec.Q).trace() / std::sqrt(static_cast<double>(n)) +
        ((spec.W + eps * spec.Z) * X1).trace();
    const double rate = (j_struct - tr_WX1) * std::sqrt(static_cast<double>(n));
    c.require(std::abs(rate - tr_Y1Q) <= 0.05 * tr_Y1Q,
              "structured n=" + fmt(n) + ": rate " + fmt(rate) + " vs " +
                  fmt(tr_Y1Q));
  }

  for (const int n : {4, 16}) {
    const MultiAgentSystem sys = assemble(spec, n);
    const OutputFeedbackController ctl = output_feedback_synthesis(
        sys, RiskParameter{0.0}, InitialCondition::line_spread(n, 1));
    const double rate =
        (ctl.cost_per_agent - tr_WX1) * std::sqrt(static_cast<double>(n));
    c.require(std::abs(rate - tr_Y1Q) <= 0.05 * tr_Y1Q,
              "dense n=" + fmt(n) + ": rate " + fmt(rate) + " vs " +
                  fmt(tr_Y1Q));
  }
}

// C6: theta_I*(n) = n/(n+1) at eps ~ 0, strictly increasing, and the
// spectral-radius condition is tight at the boundary.
void criterion6(Check& c) {
  const SystemSpec spec_eps = SystemSpec::basic(1, 1e-8);
  const SystemSpec spec0 = SystemSpec::basic(1, 0.0);
  double prev = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const double ts = theta_star_output(assemble(spec_eps, n), 1e-5);
    const double expected = static_cast<double>(n) / (n + 1.0);
    c.require(std::abs(ts - expected) <= 1e-3,
              "n=" + fmt(n) + ": theta_I* " + fmt(ts) + " vs " +
                  fmt(expected));
    c.require(ts > prev, "n=" + fmt(n) + ": not strictly increasing");
    prev = ts;

    const Matrix Yt =
        rs_structured_filter_Y(spec0, n, RiskParameter{ts}).Y_tilde_1n;
    const StructuredControlSolution xs =
        rs_structured_X(spec0, n, RiskParameter{ts});
    const Matrix X1 = xs.X_tilde_1 + xs.X_hat_1;
    const double rho = (ts * Yt * X1).eigenvalues().cwiseAbs().maxCoeff();
    const double target = std::sqrt(static_cast<double>(n));
    c.require(std::abs(rho / target - 1.0) <= 1e-3,
              "n=" + fmt(n) + ": rho/sqrt(n) = " + fmt(rho / target));
  }
}

// C7: Monte Carlo estimates against the analytic trace values.
void criterion7(Check& c) {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);

  {
    const FullInfoController lqg =
        full_info_synthesis(sys, RiskParameter{0.0});
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 200.0;
    cfg.trials = 400;
    cfg.seed = 1903;
    const CostReport rep = mc_cost(sys, lqg, RiskParameter{0.0}, cfg);
    c.require(std::abs(rep.mc_estimate - 1.0) <= 3.0 * rep.std_error,
              "theta=0: " + fmt(rep.mc_estimate) + " +- " +
                  fmt(rep.std_error) + " vs 1");
    c.require(std::abs(rep.mc_estimate - 1.0) <= 0.05,
              "theta=0: outside 5%: " + fmt(rep.mc_estimate));
  }
  {
    const FullInfoController rs = full_info_synthesis(sys, RiskParameter{0.5});
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 200.0;
    cfg.trials = 2000;
    cfg.seed = 1905;
    const CostReport rep = mc_cost(sys, rs, RiskParameter{0.5}, cfg);
    const double target = std::sqrt(2.0);
    c.require(std::abs(rep.mc_estimate - target) <= 0.10 * target,
              "theta=0.5: " + fmt(rep.mc_estimate) + " vs " + fmt(target) +
                  " (stderr " + fmt(rep.std_error) + ")");
  }
}

// C8: solver contracts and the scalar quadratic-formula oracle.
void criterion8(Check& c) {
  const auto scalar = [](double v) {
    Matrix m(1, 1);
    m << v;
    return m;
  };
  int points = 0;
  for (const double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    for (const double s : {0.25, 0.5, 1.0, 2.0}) {
      for (const double q : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto sol = solve_care(scalar(a), scalar(s), scalar(q));
        ++points;
        if (!sol) {
          c.require(false, "no solution at a=" + fmt(a) + " s=" + fmt(s) +
                               " q=" + fmt(q));
          continue;
        }
        const double oracle = (a + std::sqrt(a * a + s * q)) / s;
        c.require(std::abs(sol->X(0, 0) - oracle) <=
                      1e-12 * std::max(1.0, std::abs(oracle)),
                  "oracle mismatch at a=" + fmt(a) + " s=" + fmt(s) +
                      " q=" + fmt(q));
        c.require(sol->residual_norm <= 1e-9 * std::max(1.0, sol->X.norm()),
                  "residual contract violated");
        c.require(sol->min_eigenvalue > 0.0, "positivity violated");
        c.require(sol->closed_loop_spectral_abscissa < 0.0,
                  "Hurwitz contract violated");
      }
    }
  }
  c.require(points == 100, "grid size");

  // Matrix-valued solves keep the same contracts.
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    const Eigen::Index d = 2 + rep % 3;
    Matrix A(d, d), B(d, d), Mq(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        A(i, j) = u(gen);
        B(i, j) = u(gen);
        Mq(i, j) = u(gen);
      }
    }
    const Matrix S = B * B.transpose() + 0.1 * Matrix::Identity(d, d);
    const Matrix Qc = Mq * Mq.transpose() + 0.2 * Matrix::Identity(d, d);
    const auto sol = solve_care(A, S, Qc);
    if (!sol) {
      c.require(false, "matrix case unsolved");
      continue;
    }
    const Matrix res =
        A.transpose() * sol->X + sol->X * A - sol->X * S * sol->X + Qc;
    c.require(res.norm() <= 1e-9 * std::max(1.0, sol->X.norm()),
              "matrix residual contract violated");
    c.require(sol->min_eigenvalue > 0.0, "matrix positivity violated");
    c.require(sol->closed_loop_spectral_abscissa < 0.0,
              "matrix Hurwitz contract violated");
  }
}

// C9: trajectory shape classes and byte-identical reruns via the CLI.
void criterion9(Check& c) {
  const fs::path dir = fs::temp_directory_path() / "leqg_acceptance_traj";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto run_cli = [](std::vector<std::string> args) {
    std::vector<const char*> argv{"leqg"};
    for (const std::string& a : args) {
      argv.push_back(a.c_str());
    }
    return cli::run(static_cast<int>(argv.size()), argv.data());
  };
  c.require(run_cli({"trajectories", "--preset", "basic", "--out",
                     dir.string()}) == 0,
            "trajectories command failed");

  const auto agent_series = [](const fs::path& path, int agent) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::vector<double> xs;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
      }
      if (std::stoi(cells[1]) == agent) {
        xs.push_back(std::stod(cells[3]));
      }
    }
    return xs;
  };

  // Risk neutral: decoupled decay, no crossing.
  bool neutral_ok = true;
  for (int agent = 0; agent < 4; ++agent) {
    const auto xs =
        agent_series(dir / "trajectories_risk_neutral.csv", agent);
    if (xs.empty()) {
      neutral_ok = false;
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!(xs[k] > 0.0)) {
        neutral_ok = false;
      }
      if (k > 0 && xs[k] > xs[k - 1] + 1e-12) {
        neutral_ok = false;
      }
    }
  }
  c.require(neutral_ok, "risk-neutral run shows overshoot or growth");

  // Risk averse: at least one sign change.
  bool crossed = false;
  for (int agent = 0; agent < 4; ++agent) {
    const auto xs = agent_series(dir / "trajectories_risk_averse.csv", agent);
    for (std::size_t k = 1; k < xs.size(); ++k) {
      if (xs[k - 1] > 0.0 && xs[k] < 0.0) {
        crossed = true;
      }
    }
  }
  c.require(crossed, "risk-averse run never crosses the origin");

  // Identical seeds reproduce byte-identical outputs.
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  const std::string before = slurp(dir / "trajectories_risk_averse.csv");
  c.require(run_cli({"trajectories", "--preset", "basic", "--out",
                     dir.string(), "--mode", "risk_averse"}) == 0,
            "rerun failed");
  c.require(before == slurp(dir / "trajectories_risk_averse.csv"),
            "rerun output differs");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "LQG cost-per-agent invariance", criterion1},
      {2, "closed-form n-agent solution equivalence", criterion2},
      {3, "theta=0.97 breakpoint at n=4 and theta*(n)=n/(n+eps)", criterion3},
      {4, "theta*(n) constancy at eps=0", criterion4},
      {5, "1/sqrt(n) estimation rate", criterion5},
      {6, "theta_I*(n) curve and spectral-radius boundary", criterion6},
      {7, "Monte Carlo vs analytic cost", criterion7},
      {8, "Riccati solver contracts and scalar oracle", criterion8},
      {9, "trajectory shape classes and reproducibility", criterion9},
  };

  int failures = 0;
  for (const Criterion& crit : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      crit.fn(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (check.ok) {
      std::printf("[PASS] C%d: %s (%.1fs)\n", crit.id, crit.name, secs);
    } else {
      ++failures;
      std::printf("[FAIL] C%d: %s (%.1fs) -- %s\n", crit.id, crit.name, secs,
                  check.detail.str().c_str());
    }
    std::fflush(stdout);
  }
  return failures;
}
