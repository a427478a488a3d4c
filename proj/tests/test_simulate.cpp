#include <doctest.h>

#include <cmath>

#include <leqg/errors.hpp>
#include <leqg/simulate.hpp>
#include <leqg/synthesis.hpp>

using namespace leqg;

namespace {

SimConfig quick_cfg(double horizon, int trials, std::uint64_t seed) {
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = horizon;
  cfg.trials = trials;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("simulate: zero-noise equilibrium stays at the origin") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 2);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.5});
  SimConfig cfg = quick_cfg(2.0, 1, 1);
  cfg.evader_mode = EvaderMode::kFrozen;
  const Trajectory traj = simulate(sys, ctl, cfg, Vector::Zero(2));
  CHECK(traj.states.cwiseAbs().maxCoeff() == 0.0);
  CHECK(traj.running_cost.back() == 0.0);
}

TEST_CASE("simulate: identical seed and config reproduce outputs bit for bit") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.2), 2);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.3});
  const SimConfig cfg = quick_cfg(3.0, 1, 42);
  Vector x0(2);
  x0 << 1.0, -0.5;
  const Trajectory a = simulate(sys, ctl, cfg, x0);
  const Trajectory b = simulate(sys, ctl, cfg, x0);
  CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.controls - b.controls).cwiseAbs().maxCoeff() == 0.0);

  SimConfig other = cfg;
  other.seed = 43;
  const Trajectory c = simulate(sys, ctl, other, x0);
  CHECK((a.states - c.states).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("simulate: frozen-evader risk-neutral agents decay independently") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 3);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.0});
  SimConfig cfg = quick_cfg(8.0, 1, 5);
  cfg.evader_mode = EvaderMode::kFrozen;
  Vector x0(3);
  x0 << 1.0, 2.0, 3.0;
  const Trajectory traj = simulate(sys, ctl, cfg, x0);
  for (Eigen::Index agent = 0; agent < 3; ++agent) {
    double prev = traj.states(agent, 0);
    for (Eigen::Index k = 1; k < traj.states.cols(); ++k) {
      const double cur = traj.states(agent, k);
      CHECK(cur > 0.0);        // no overshoot
      CHECK(cur <= prev + 1e-12);  // monotone decay
      prev = cur;
    }
  }
}

TEST_CASE("simulate: running cost is nondecreasing") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.3), 2);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.2});
  const SimConfig cfg = quick_cfg(2.0, 1, 9);
  Vector x0(2);
  x0 << 1.0, 2.0;
  const Trajectory traj = simulate(sys, ctl, cfg, x0);
  for (std::size_t k = 1; k < traj.running_cost.size(); ++k) {
    CHECK(traj.running_cost[k] >= traj.running_cost[k - 1]);
  }
}

TEST_CASE("mc_cost: stationary LQG cost matches Tr(W X)") {
  // Closed loop dx = -x dt - dw has stationary variance 1/2, so
  // E[x^2 + u^2] = 1 = Tr(W X).
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.0});
  SimConfig cfg = quick_cfg(100.0, 100, 2024);
  const CostReport report = mc_cost(sys, ctl, RiskParameter{0.0}, cfg);
  REQUIRE(report.analytic.has_value());
  CHECK(*report.analytic == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(report.mc_estimate - 1.0) <= 3.0 * report.std_error);
  CHECK(std::abs(report.mc_estimate - 1.0) <= 0.05);
}

TEST_CASE("mc_cost: risk-sensitive estimate approaches the trace formula") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.5});
  SimConfig cfg = quick_cfg(60.0, 200, 77);
  const CostReport report = mc_cost(sys, ctl, RiskParameter{0.5}, cfg);
  CHECK(*report.analytic == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  // Finite-horizon offset is O(1/T); 10% is ample at T = 60.
  CHECK(std::abs(report.mc_estimate - std::sqrt(2.0)) <=
        0.10 * std::sqrt(2.0));
}

TEST_CASE("mc_cost: tilted and plain estimators agree on a mild case") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.2});
  SimConfig cfg = quick_cfg(30.0, 300, 4);
  const CostReport tilted = mc_cost(sys, ctl, RiskParameter{0.2}, cfg);
  cfg.estimator = Estimator::kPlain;
  const CostReport plain = mc_cost(sys, ctl, RiskParameter{0.2}, cfg);
  const double band =
      3.0 * std::sqrt(tilted.std_error * tilted.std_error +
                      plain.std_error * plain.std_error) +
      1e-3;
  CHECK(std::abs(tilted.mc_estimate - plain.mc_estimate) <= band);
}

TEST_CASE("mc_cost: deterministic zero-noise run has zero standard error") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 2);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.3});
  SimConfig cfg = quick_cfg(5.0, 8, 3);
  cfg.evader_mode = EvaderMode::kFrozen;
  Vector x0(2);
  x0 << 1.0, 2.0;
  cfg.x_bar_0 = x0;
  cfg.Sigma_0 = 1e-40 * Matrix::Identity(2, 2);  // effectively deterministic

  const CostReport report = mc_cost(sys, ctl, RiskParameter{0.3}, cfg);
  CHECK(report.std_error <= 1e-12);

  // Equals the deterministic transient cost from the recorded trajectory:
  // (2/(theta T)) * (theta/2) * integral = integral / T.
  const Trajectory traj = simulate(sys, ctl, cfg, x0);
  CHECK(report.mc_estimate ==
        doctest::Approx(traj.running_cost.back() / cfg.horizon)
            .epsilon(1e-9));
}

TEST_CASE("mc_cost: halving dt moves the estimate by less than 3 sigma") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.0});
  SimConfig coarse = quick_cfg(50.0, 150, 100);
  coarse.dt = 2e-3;
  SimConfig fine = quick_cfg(50.0, 150, 200);
  fine.dt = 1e-3;
  const CostReport a = mc_cost(sys, ctl, RiskParameter{0.0}, coarse);
  const CostReport b = mc_cost(sys, ctl, RiskParameter{0.0}, fine);
  const double band = 3.0 * std::sqrt(a.std_error * a.std_error +
                                      b.std_error * b.std_error);
  CHECK(std::abs(a.mc_estimate - b.mc_estimate) <= band);
}

TEST_CASE("mc_cost: thread count does not change the result") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.1), 2);
  const FullInfoController ctl = full_info_synthesis(sys, RiskParameter{0.4});
  SimConfig cfg = quick_cfg(5.0, 16, 11);
  cfg.threads = 1;
  const CostReport serial = mc_cost(sys, ctl, RiskParameter{0.4}, cfg);
  cfg.threads = 4;
  const CostReport parallel = mc_cost(sys, ctl, RiskParameter{0.4}, cfg);
  CHECK(serial.mc_estimate == parallel.mc_estimate);
  CHECK(serial.std_error == parallel.std_error);
}

TEST_CASE("simulate (output feedback): filter residual covariance approaches Y") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.25), 1);
  const InitialCondition ic = InitialCondition::line_spread(1, 1);
  const OutputFeedbackController ctl =
      output_feedback_synthesis(sys, RiskParameter{0.0}, ic);
  SimConfig cfg = quick_cfg(2000.0, 1, 8);
  const Trajectory traj = simulate(sys, ctl, cfg, ic.x_bar_0);

  const Eigen::Index k0 = traj.states.cols() / 4;
  double acc = 0.0;
  for (Eigen::Index k = k0; k < traj.states.cols(); ++k) {
    const double e = traj.states(0, k) - traj.filter_states(0, k);
    acc += e * e;
  }
  const double avg = acc / static_cast<double>(traj.states.cols() - k0);
  CHECK(std::abs(avg - ctl.Y_n.X(0, 0)) <= 0.10 * ctl.Y_n.X(0, 0));
}

TEST_CASE("simulate (output feedback): xhat and xtilde realizations agree") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.3), 2);
  const InitialCondition ic = InitialCondition::line_spread(2, 1);
  const OutputFeedbackController ctl =
      output_feedback_synthesis(sys, RiskParameter{0.3}, ic);

  SimConfig cfg = quick_cfg(5.0, 1, 123);
  const Trajectory hat = simulate(sys, ctl, cfg, ic.x_bar_0);
  cfg.filter_realization = FilterRealization::kXTilde;
  const Trajectory tilde = simulate(sys, ctl, cfg, ic.x_bar_0);

  // Same noise stream: states coincide and M^{-1} xhat tracks xtilde.
  CHECK((hat.states - tilde.states).cwiseAbs().maxCoeff() <= 1e-9);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < hat.filter_states.cols(); ++k) {
    const Vector mapped = ctl.M_inv * hat.filter_states.col(k);
    worst = std::max(worst,
                     (mapped - tilde.filter_states.col(k)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-6);
  CHECK((hat.controls - tilde.controls).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("mc_cost (output feedback): LQG estimate matches the trace formula") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.25), 1);
  const InitialCondition ic = InitialCondition::line_spread(1, 1);
  const OutputFeedbackController ctl =
      output_feedback_synthesis(sys, RiskParameter{0.0}, ic);
  SimConfig cfg = quick_cfg(100.0, 80, 31);
  const CostReport report = mc_cost(sys, ctl, RiskParameter{0.0}, cfg);
  REQUIRE(report.analytic.has_value());
  CHECK(std::abs(report.mc_estimate - *report.analytic) <=
        std::max(3.0 * report.std_error, 0.05 * *report.analytic));
}

TEST_CASE("mc_cost (output feedback): risk-sensitive estimate is consistent") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.25), 1);
  const InitialCondition ic = InitialCondition::line_spread(1, 1);
  const OutputFeedbackController ctl =
      output_feedback_synthesis(sys, RiskParameter{0.15}, ic);
  SimConfig cfg = quick_cfg(60.0, 300, 57);
  const CostReport report = mc_cost(sys, ctl, RiskParameter{0.15}, cfg);
  REQUIRE(report.analytic.has_value());
  // Output feedback uses the plain log-mean-exp sampler; at this mild
  // theta its weights have finite variance.
  CHECK(std::abs(report.mc_estimate - *report.analytic) <=
        std::max(4.0 * report.std_error, 0.10 * *report.analytic));
}

TEST_CASE("simulate: blowup guard reports the offending time") {
  const MultiAgentSystem sys = assemble(SystemSpec::basic(1, 0.0), 1);
  FullInfoController bad = full_info_synthesis(sys, RiskParameter{0.0});
  bad.K = -Matrix::Identity(1, 1);  // destabilizing gain
  SimConfig cfg = quick_cfg(60.0, 1, 2);
  cfg.evader_mode = EvaderMode::kFrozen;
  cfg.blowup_guard = 1e6;
  Vector x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(simulate(sys, bad, cfg, x0), NumericalBlowupError);
  try {
    simulate(sys, bad, cfg, x0);
  } catch (const NumericalBlowupError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 60.0);
  }
}
