#ifndef LEQG_STRUCTURED_HPP_
#define LEQG_STRUCTURED_HPP_

#include <Eigen/Core>

#include "leqg/synthesis.hpp"
#include "leqg/system.hpp"

namespace leqg {

/// Closed-form n-agent control solution built from two single-agent
/// Riccati solutions:
///
///   X_n = (1/n) I_n (x) X_tilde_1 + (1/n^2) E_n (x) X_hat_1.
///
/// X_tilde_1 is the single-agent LQG solution and X_tilde_1 + X_hat_1 the
/// single-agent risk-sensitive solution, so the eigenvalues of X_n are
/// those of X_tilde_1/n and (X_tilde_1 + X_hat_1)/n.
struct StructuredControlSolution {
  Matrix X_tilde_1;
  Matrix X_hat_1;
  Eigen::Index n = 0;
  double cost_per_agent = 0.0;

  Matrix assembled() const;
};

/// Closed-form filter solution for A = 0 in the small-epsilon regime:
/// Y_n = (E_n / sqrt(n)) (x) Y_tilde_1n, where Y_tilde_1n solves the
/// single-block equation Y (C V^{-1} C - (theta/n) Q) Y = W + eps Z.
struct StructuredFilterSolution {
  Matrix Y_tilde_1n;
  Eigen::Index n = 0;

  Matrix assembled() const;
};

/// LQG (theta = 0) structured control solution: X_hat_1 = 0 and
/// X_n = (1/n) I_n (x) X_tilde_1; the per-agent cost Tr((W + eps Z) X_tilde_1)
/// does not depend on n.
StructuredControlSolution lqg_structured_X(const SystemSpec& spec,
                                           Eigen::Index n);

/// Risk-sensitive structured control solution, valid for epsilon = 0.
/// Throws EpsilonNotZeroError otherwise, ThetaAboveCriticalError when the
/// single-agent risk-sensitive equation is unsolvable.
StructuredControlSolution rs_structured_X(const SystemSpec& spec,
                                          Eigen::Index n, RiskParameter theta);

/// Risk-sensitive structured filter solution; requires A = 0 and
/// C V^{-1} C - (theta/n) Q > 0.
StructuredFilterSolution rs_structured_filter_Y(const SystemSpec& spec,
                                                Eigen::Index n,
                                                RiskParameter theta);

/// Output-feedback admissibility condition in the A = 0, epsilon -> 0
/// regime: rho(theta * Y_tilde * X_1) < sqrt(n).
bool spectral_radius_condition(const Matrix& Y_tilde, const Matrix& X_1,
                               RiskParameter theta, Eigen::Index n);

/// LQG output-feedback cost in the A = 0, epsilon -> 0 regime:
/// Tr(Y_1 Q)/sqrt(n) + Tr(W X_1), with single-agent solutions Y_1, X_1.
/// Converges to the single-agent full-information cost at rate 1/sqrt(n).
double asymptotic_lqg_cost(const SystemSpec& spec, Eigen::Index n);

}  // namespace leqg

#endif  // LEQG_STRUCTURED_HPP_
