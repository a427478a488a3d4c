#include "leqg/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>

#include "leqg/errors.hpp"

namespace leqg {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-trial seeds are derived, not sequential, so trials are independent
// of thread assignment and trial count.
std::uint64_t derive_trial_seed(std::uint64_t seed, int trial) {
  return splitmix64(seed ^ splitmix64(0x6c2c1b5f9e3779b9ULL +
                                      static_cast<std::uint64_t>(trial)));
}

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() { return dist_(gen_); }

  void fill(Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = dist_(gen_);
    }
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> dist_;
};

int step_count(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) {
    throw std::invalid_argument("SimConfig: dt must be > 0");
  }
  if (!(cfg.horizon >= cfg.dt)) {
    throw std::invalid_argument("SimConfig: horizon must be >= dt");
  }
  return static_cast<int>(std::llround(cfg.horizon / cfg.dt));
}

void check_guard(const Vector& x, double guard, double t) {
  if (!(x.cwiseAbs().maxCoeff() < guard)) {
    throw NumericalBlowupError(
        t, "simulate: state norm exceeded the overflow guard at t = " +
               std::to_string(t));
  }
}

struct TrialOutcome {
  double integrated_cost = 0.0;   // full-window (x'Q_n x + u'R_n u)/n dt
  double tail_cost = 0.0;         // same, after burn-in
  double tail_time = 0.0;
  double log_weight = 0.0;        // exact likelihood ratio vs nominal chain
};

double burn_in_time(const SimConfig& cfg) {
  return std::min(cfg.horizon / 10.0, 10.0);
}

// --------------------------------------------------------------------------
// Full information

struct FullInfoLoop {
  const MultiAgentSystem* sys = nullptr;
  Matrix A_cl;  // A_n - B_n K
  Matrix K;
  Matrix P_cost;  // (Q_n + K'R_n K)/n
  Matrix X;       // GARE solution (for the tilted estimator)
  bool pursuer_noise = false;
  bool evader_noise = false;
  bool tilted = false;
  double theta = 0.0;
};

FullInfoLoop make_full_info_loop(const MultiAgentSystem& sys,
                                 const FullInfoController& ctl,
                                 const SimConfig& cfg, bool tilted) {
  FullInfoLoop loop;
  loop.sys = &sys;
  const Matrix Bn = sys.B_n.dense();
  loop.A_cl = sys.A_n.dense() - Bn * ctl.K;
  loop.K = ctl.K;
  const Matrix Rn = sys.R_n.dense();
  loop.P_cost = (sys.Q_n.dense() + ctl.K.transpose() * Rn * ctl.K) /
                static_cast<double>(sys.n);
  loop.X = ctl.X_n.X;
  loop.pursuer_noise = sys.spec.epsilon > 0.0;
  loop.evader_noise = cfg.evader_mode == EvaderMode::kModel;
  loop.tilted = tilted;
  loop.theta = ctl.theta;
  return loop;
}

TrialOutcome run_full_info_trial(const FullInfoLoop& loop, const SimConfig& cfg,
                                 Vector x, GaussianStream& rng,
                                 Trajectory* record) {
  const MultiAgentSystem& sys = *loop.sys;
  const Eigen::Index n = sys.n;
  const Eigen::Index d = sys.spec.d;
  const Eigen::Index nd = sys.state_dim();
  const int steps = step_count(cfg);
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double sqrt_eps = std::sqrt(sys.spec.epsilon);
  const double t_burn = burn_in_time(cfg);

  const Matrix& F = sys.spec.F;
  const Matrix& G = sys.spec.G;

  Vector drift(nd), xi_p(nd), h_p(nd), v(nd);
  Vector xi_e(d), h_e(d), g_e(d);

  if (record != nullptr) {
    record->times.resize(steps + 1);
    record->states.resize(nd, steps + 1);
    record->controls.resize(sys.input_dim(), steps + 1);
    record->filter_states.resize(0, 0);
    record->running_cost.resize(steps + 1);
  }

  TrialOutcome out;
  double t = 0.0;
  for (int k = 0; k <= steps; ++k) {
    check_guard(x, cfg.blowup_guard, t);
    const double cost_rate = x.dot(loop.P_cost * x);
    if (record != nullptr) {
      record->times[k] = t;
      record->states.col(k) = x;
      record->controls.col(k).noalias() = -loop.K * x;
      record->running_cost[k] = out.integrated_cost;
    }
    if (k == steps) {
      break;
    }

    out.integrated_cost += cost_rate * dt;
    if (t >= t_burn) {
      out.tail_cost += cost_rate * dt;
      out.tail_time += dt;
    }

    drift.noalias() = loop.A_cl * x;

    if (loop.tilted) {
      // Exponential tilt toward A_n - S_n(theta) X_n; exact per-step
      // likelihood of the nominal Euler chain relative to the tilted one.
      v.noalias() = loop.X * x;
      if (loop.pursuer_noise) {
        for (Eigen::Index i = 0; i < n; ++i) {
          h_p.segment(i * d, d).noalias() =
              (loop.theta * sqrt_eps) * (F.transpose() * v.segment(i * d, d));
        }
      }
      if (loop.evader_noise) {
        h_e.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
          h_e.noalias() -= loop.theta * (G.transpose() * v.segment(i * d, d));
        }
      }
    }

    x.noalias() += dt * drift;
    if (loop.pursuer_noise) {
      rng.fill(xi_p);
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector incr = sqrt_dt * xi_p.segment(i * d, d);
        if (loop.tilted) {
          incr += dt * h_p.segment(i * d, d);
        }
        x.segment(i * d, d).noalias() += sqrt_eps * (F * incr);
      }
      if (loop.tilted) {
        out.log_weight -= sqrt_dt * xi_p.dot(h_p) + 0.5 * dt * h_p.squaredNorm();
      }
    }
    if (loop.evader_noise) {
      for (Eigen::Index i = 0; i < d; ++i) {
        xi_e(i) = rng.next();
      }
      Vector incr = sqrt_dt * xi_e;
      if (loop.tilted) {
        incr += dt * h_e;
      }
      g_e.noalias() = G * incr;
      for (Eigen::Index i = 0; i < n; ++i) {
        x.segment(i * d, d) -= g_e;
      }
      if (loop.tilted) {
        out.log_weight -= sqrt_dt * xi_e.dot(h_e) + 0.5 * dt * h_e.squaredNorm();
      }
    }
    t += dt;
  }
  return out;
}

// --------------------------------------------------------------------------
// Output feedback

struct OutputFeedbackLoop {
  const MultiAgentSystem* sys = nullptr;
  Matrix A_n, B_n;
  Matrix gain;        // u = -gain xhat (xhat realization)
  Matrix K_tilde;     // u = -K_tilde z (xtilde realization), n R^-1 B' X
  Matrix filter_free; // filter_A (xhat) or A_n - S_n X - Minv L C_n (xtilde)
  Matrix control_in;  // B_n (xhat) or Minv B_n acting on u~ (xtilde)
  Matrix state_in;    // L C_n or Minv L C_n
  Matrix meas_noise;  // L H_n or Minv L H_n
  Matrix Q_cost;      // Q_n / n
  Matrix R_cost;      // R_n / n
  bool pursuer_noise = false;
  bool evader_noise = false;
  bool xtilde = false;
};

OutputFeedbackLoop make_output_feedback_loop(const MultiAgentSystem& sys,
                                             const OutputFeedbackController& ctl,
                                             const SimConfig& cfg) {
  OutputFeedbackLoop loop;
  loop.sys = &sys;
  loop.A_n = sys.A_n.dense();
  loop.B_n = sys.B_n.dense();
  loop.Q_cost = sys.Q_n.dense() / static_cast<double>(sys.n);
  loop.R_cost = sys.R_n.dense() / static_cast<double>(sys.n);
  loop.pursuer_noise = sys.spec.epsilon > 0.0;
  loop.evader_noise = cfg.evader_mode == EvaderMode::kModel;
  loop.xtilde = cfg.filter_realization == FilterRealization::kXTilde;

  const Matrix Hn = StructuredMatrix::block_diagonal(sys.n, sys.spec.H).dense();
  const Matrix Cn = sys.C_n.dense();
  const Matrix LCn = ctl.filter_L * Cn;

  if (!loop.xtilde) {
    loop.gain = ctl.gain;
    loop.filter_free = ctl.filter_A;
    loop.control_in = loop.B_n;
    loop.state_in = LCn;
    loop.meas_noise = ctl.filter_L * Hn;
  } else {
    // z = (I - theta Y X)^{-1} xhat obeys
    //   dz = (A_n - S_n X) z + Minv B_n u~ + Minv L (y - C z),
    // with u~ = u + n R_n^{-1} B_n' X z (zero at the optimal control).
    loop.K_tilde = ctl.gain * (Matrix::Identity(sys.state_dim(),
                                                sys.state_dim()) -
                               ctl.theta * ctl.Y_n.X * ctl.X_n.X);
    const Matrix BRinvBt =
        sys.spec.B * sys.spec.R.llt().solve(sys.spec.B.transpose());
    const Matrix Sn =
        static_cast<double>(sys.n) *
            StructuredMatrix::block_diagonal(sys.n, BRinvBt).dense() -
        ctl.theta * sys.noise_intensity();
    loop.filter_free =
        loop.A_n - Sn * ctl.X_n.X - ctl.M_inv * LCn;
    loop.control_in = ctl.M_inv * loop.B_n;
    loop.state_in = ctl.M_inv * LCn;
    loop.meas_noise = ctl.M_inv * ctl.filter_L * Hn;
  }
  return loop;
}

TrialOutcome run_output_feedback_trial(const OutputFeedbackLoop& loop,
                                       const SimConfig& cfg, Vector x,
                                       Vector xf, GaussianStream& rng,
                                       Trajectory* record) {
  const MultiAgentSystem& sys = *loop.sys;
  const Eigen::Index n = sys.n;
  const Eigen::Index d = sys.spec.d;
  const Eigen::Index nd = sys.state_dim();
  const int steps = step_count(cfg);
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double sqrt_eps = std::sqrt(sys.spec.epsilon);
  const double t_burn = burn_in_time(cfg);

  const Matrix& F = sys.spec.F;
  const Matrix& G = sys.spec.G;
  const Matrix& gain = loop.xtilde ? loop.K_tilde : loop.gain;

  Vector u(sys.input_dim());
  Vector u_tilde(sys.input_dim());
  Vector x_drift(nd), f_drift(nd), xi_p(nd), xi_v(sys.output_dim());
  Vector xi_e(d), g_e(d);

  if (record != nullptr) {
    record->times.resize(steps + 1);
    record->states.resize(nd, steps + 1);
    record->controls.resize(sys.input_dim(), steps + 1);
    record->filter_states.resize(nd, steps + 1);
    record->running_cost.resize(steps + 1);
  }

  TrialOutcome out;
  double t = 0.0;
  for (int k = 0; k <= steps; ++k) {
    check_guard(x, cfg.blowup_guard, t);
    check_guard(xf, cfg.blowup_guard, t);
    u.noalias() = -gain * xf;
    const double cost_rate = x.dot(loop.Q_cost * x) + u.dot(loop.R_cost * u);
    if (record != nullptr) {
      record->times[k] = t;
      record->states.col(k) = x;
      record->controls.col(k) = u;
      record->filter_states.col(k) = xf;
      record->running_cost[k] = out.integrated_cost;
    }
    if (k == steps) {
      break;
    }

    out.integrated_cost += cost_rate * dt;
    if (t >= t_burn) {
      out.tail_cost += cost_rate * dt;
      out.tail_time += dt;
    }

    x_drift.noalias() = loop.A_n * x;
    x_drift.noalias() += loop.B_n * u;
    f_drift.noalias() = loop.filter_free * xf;
    if (!loop.xtilde) {
      f_drift.noalias() += loop.control_in * u;
    } else {
      u_tilde = u;
      u_tilde.noalias() += loop.K_tilde * xf;
      f_drift.noalias() += loop.control_in * u_tilde;
    }
    f_drift.noalias() += loop.state_in * x;

    x.noalias() += dt * x_drift;
    xf.noalias() += dt * f_drift;

    if (loop.pursuer_noise) {
      rng.fill(xi_p);
      for (Eigen::Index i = 0; i < n; ++i) {
        x.segment(i * d, d).noalias() +=
            (sqrt_eps * sqrt_dt) * (F * xi_p.segment(i * d, d));
      }
    }
    if (loop.evader_noise) {
      for (Eigen::Index i = 0; i < d; ++i) {
        xi_e(i) = rng.next();
      }
      g_e.noalias() = sqrt_dt * (G * xi_e);
      for (Eigen::Index i = 0; i < n; ++i) {
        x.segment(i * d, d) -= g_e;
      }
    }
    // Measurement noise drives the filter every step through the sampled
    // innovation: L (y - C xf) dt with y dt = C x dt + H dV.
    rng.fill(xi_v);
    xf.noalias() += sqrt_dt * (loop.meas_noise * xi_v);

    t += dt;
  }
  return out;
}

// --------------------------------------------------------------------------
// Monte Carlo driver

struct McSetup {
  Vector x_bar_0;
  Matrix sigma_chol;  // lower Cholesky factor of Sigma_0
};

McSetup mc_setup(const MultiAgentSystem& sys, const SimConfig& cfg) {
  McSetup s;
  const Eigen::Index nd = sys.state_dim();
  if (cfg.x_bar_0) {
    if (cfg.x_bar_0->size() != nd) {
      throw std::invalid_argument("mc_cost: x_bar_0 has wrong dimension");
    }
    s.x_bar_0 = *cfg.x_bar_0;
  } else {
    s.x_bar_0 = InitialCondition::line_spread(sys.n, sys.spec.d).x_bar_0;
  }
  Matrix sigma = cfg.Sigma_0 ? *cfg.Sigma_0 : Matrix::Identity(nd, nd);
  if (sigma.rows() != nd || sigma.cols() != nd) {
    throw std::invalid_argument("mc_cost: Sigma_0 has wrong dimension");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("mc_cost: Sigma_0 must be positive definite");
  }
  s.sigma_chol = llt.matrixL();
  return s;
}

// Runs `trials` trials in parallel; each result slot is filled by trial
// index, so the reduction below is independent of scheduling.
template <typename TrialFn>
std::vector<TrialOutcome> run_trials(const SimConfig& cfg,
                                     const TrialFn& one_trial) {
  const int trials = cfg.trials;
  if (trials < 1) {
    throw std::invalid_argument("SimConfig: trials must be >= 1");
  }
  std::vector<TrialOutcome> results(static_cast<std::size_t>(trials));

  unsigned hw = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                : std::thread::hardware_concurrency();
  hw = std::max(1u, std::min<unsigned>(hw, static_cast<unsigned>(trials)));

  if (hw == 1) {
    for (int i = 0; i < trials; ++i) {
      results[static_cast<std::size_t>(i)] = one_trial(i);
    }
    return results;
  }

  std::atomic<int> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (!abort.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1);
      if (i >= trials) {
        return;
      }
      try {
        results[static_cast<std::size_t>(i)] = one_trial(i);
      } catch (...) {
        std::scoped_lock lock(err_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
        abort.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(hw);
  for (unsigned i = 0; i < hw; ++i) {
    pool.emplace_back(worker);
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
  return results;
}

CostReport combine_results(const std::vector<TrialOutcome>& results,
                           double theta, const SimConfig& cfg) {
  CostReport report;
  report.theta = theta;
  const auto n = static_cast<double>(results.size());

  if (theta == 0.0) {
    // Time-averaged quadratic cost after burn-in, averaged across trials.
    double mean = 0.0;
    for (const TrialOutcome& r : results) {
      mean += r.tail_cost / r.tail_time;
    }
    mean /= n;
    double var = 0.0;
    for (const TrialOutcome& r : results) {
      const double dev = r.tail_cost / r.tail_time - mean;
      var += dev * dev;
    }
    report.mc_estimate = mean;
    report.std_error = results.size() > 1
                           ? std::sqrt(var / (n - 1.0) / n)
                           : 0.0;
    return report;
  }

  // (2/(theta T)) * log-mean-exp of (theta/2) * integrated cost (plus the
  // likelihood weight when the tilted sampler is active), with a running
  // max so the exponentials never overflow.
  std::vector<double> exponents;
  exponents.reserve(results.size());
  double max_expo = -std::numeric_limits<double>::infinity();
  bool overflow = false;
  for (const TrialOutcome& r : results) {
    const double s = 0.5 * theta * r.integrated_cost + r.log_weight;
    overflow = overflow || !std::isfinite(s);
    exponents.push_back(s);
    max_expo = std::max(max_expo, s);
  }
  if (overflow) {
    throw EstimatorOverflowError(
        max_expo, "mc_cost: exponent out of range (max exponent seen " +
                      std::to_string(max_expo) + ")");
  }
  double sum = 0.0;
  for (const double s : exponents) {
    sum += std::exp(s - max_expo);
  }
  const double mean_w = sum / n;
  const double scale = 2.0 / (theta * cfg.horizon);
  report.mc_estimate = scale * (max_expo + std::log(mean_w));

  double var_w = 0.0;
  for (const double s : exponents) {
    const double dev = std::exp(s - max_expo) - mean_w;
    var_w += dev * dev;
  }
  const double sd_w =
      results.size() > 1 ? std::sqrt(var_w / (n - 1.0)) : 0.0;
  // Delta method on log of the weight mean.
  report.std_error = std::abs(scale) * sd_w / (std::sqrt(n) * mean_w);
  return report;
}

}  // namespace

Trajectory simulate(const MultiAgentSystem& sys, const FullInfoController& ctl,
                    const SimConfig& cfg, const Vector& x0) {
  if (x0.size() != sys.state_dim()) {
    throw std::invalid_argument("simulate: x0 has wrong dimension");
  }
  const FullInfoLoop loop = make_full_info_loop(sys, ctl, cfg, false);
  GaussianStream rng(derive_trial_seed(cfg.seed, 0));
  Trajectory traj;
  run_full_info_trial(loop, cfg, x0, rng, &traj);
  return traj;
}

Trajectory simulate(const MultiAgentSystem& sys,
                    const OutputFeedbackController& ctl, const SimConfig& cfg,
                    const Vector& x0) {
  if (x0.size() != sys.state_dim()) {
    throw std::invalid_argument("simulate: x0 has wrong dimension");
  }
  const OutputFeedbackLoop loop = make_output_feedback_loop(sys, ctl, cfg);
  GaussianStream rng(derive_trial_seed(cfg.seed, 0));
  Vector xf0 = ctl.filter_x0;
  if (loop.xtilde) {
    const Matrix M = Matrix::Identity(sys.state_dim(), sys.state_dim()) -
                     ctl.theta * ctl.Y_n.X * ctl.X_n.X;
    xf0 = M.partialPivLu().solve(xf0).eval();
  }
  Trajectory traj;
  run_output_feedback_trial(loop, cfg, x0, xf0, rng, &traj);
  return traj;
}

CostReport mc_cost(const MultiAgentSystem& sys, const FullInfoController& ctl,
                   RiskParameter theta, const SimConfig& cfg) {
  const bool tilt = cfg.estimator == Estimator::kAuto && theta.theta != 0.0 &&
                    theta.theta == ctl.theta;
  const FullInfoLoop loop = make_full_info_loop(sys, ctl, cfg, tilt);
  const McSetup setup = mc_setup(sys, cfg);
  const Eigen::Index nd = sys.state_dim();

  auto one_trial = [&](int trial) {
    GaussianStream rng(derive_trial_seed(cfg.seed, trial));
    Vector xi(nd);
    rng.fill(xi);
    const Vector x0 = setup.x_bar_0 + setup.sigma_chol * xi;
    return run_full_info_trial(loop, cfg, x0, rng, nullptr);
  };

  CostReport report = combine_results(run_trials(cfg, one_trial), theta.theta, cfg);
  if (theta.theta == ctl.theta) {
    report.analytic = ctl.cost_per_agent;
  }
  return report;
}

CostReport mc_cost(const MultiAgentSystem& sys,
                   const OutputFeedbackController& ctl, RiskParameter theta,
                   const SimConfig& cfg) {
  const OutputFeedbackLoop loop = make_output_feedback_loop(sys, ctl, cfg);
  const McSetup setup = mc_setup(sys, cfg);
  const Eigen::Index nd = sys.state_dim();

  Vector xf0 = ctl.filter_x0;
  if (loop.xtilde) {
    const Matrix M = Matrix::Identity(nd, nd) -
                     ctl.theta * ctl.Y_n.X * ctl.X_n.X;
    xf0 = M.partialPivLu().solve(xf0).eval();
  }

  auto one_trial = [&](int trial) {
    GaussianStream rng(derive_trial_seed(cfg.seed, trial));
    Vector xi(nd);
    rng.fill(xi);
    const Vector x0 = setup.x_bar_0 + setup.sigma_chol * xi;
    return run_output_feedback_trial(loop, cfg, x0, xf0, rng, nullptr);
  };

  CostReport report = combine_results(run_trials(cfg, one_trial), theta.theta, cfg);
  if (theta.theta == ctl.theta) {
    report.analytic = ctl.cost_per_agent;
  }
  return report;
}

}  // namespace leqg
