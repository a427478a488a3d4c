#ifndef LEQG_SYNTHESIS_HPP_
#define LEQG_SYNTHESIS_HPP_

#include <optional>

#include <Eigen/Core>

#include "leqg/riccati.hpp"
#include "leqg/system.hpp"

namespace leqg {

/// Risk-sensitivity parameter: theta > 0 risk-averse, theta < 0
/// risk-seeking, theta = 0 risk-neutral (LQG).
struct RiskParameter {
  double theta = 0.0;
};

/// State-feedback controller u = -K x for the perfect-measurement problem,
/// with K = n R_n^{-1} B_n' X_n.
struct FullInfoController {
  GareSolution X_n;
  Matrix K;
  double cost_per_agent = 0.0;  // Tr((W_n + eps Z_n) X_n)
  double theta = 0.0;
};

/// Gaussian initial state: mean and covariance of x0.
struct InitialCondition {
  Vector x_bar_0;
  Matrix Sigma_0;

  /// Agents spread on a line along the first coordinate at
  /// spacing, 2*spacing, ..., n*spacing; Sigma_0 = I.
  static InitialCondition line_spread(Eigen::Index n, Eigen::Index d,
                                      double spacing = 1.0);
};

/// Output-feedback controller: u = -gain * xhat with the risk-sensitive
/// filter dxhat = filter_A xhat + filter_B u + filter_L y.
struct OutputFeedbackController {
  GareSolution X_n;
  GareSolution Y_n;
  Matrix M_inv;     // (I - theta Y_n X_n)^{-1}
  Matrix gain;      // n R_n^{-1} B_n' X_n M_inv
  Matrix filter_A;  // A_n + theta Y_n Q_n/n - Y_n C_n' V_n^{-1} C_n
  Matrix filter_B;  // B_n
  Matrix filter_L;  // Y_n C_n' V_n^{-1}
  Vector filter_x0;
  double cost_per_agent = 0.0;
  double theta = 0.0;
  bool sigma0_exceeds_Y = false;  // warning: optimality claim needs Sigma_0 <= Y_n
};

/// Full-information LEQG synthesis. Builds
/// S_n(theta) = n B_n R_n^{-1} B_n' - theta (W_n + eps Z_n), solves the
/// control GARE A_n'X + X A_n - X S_n X + Q_n/n = 0 and returns the gain
/// and the per-agent cost.
///
/// Throws ModelAssumptionError if (A,B) is not controllable or (A,Q) not
/// observable, ThetaAboveCriticalError if the GARE has no admissible
/// solution.
FullInfoController full_info_synthesis(const MultiAgentSystem& sys,
                                       RiskParameter theta);

/// As full_info_synthesis but reports theta at/above critical as nullopt
/// instead of throwing. Assumption violations still throw.
std::optional<FullInfoController> try_full_info_synthesis(
    const MultiAgentSystem& sys, RiskParameter theta);

/// Output-feedback LEQG synthesis: solves both GAREs, requires all
/// eigenvalues of I - theta Y_n X_n to be positive, and returns the filter
/// realization with cost
/// J_I = Tr(Y_n Q_n/n + Y_n C_n'V_n^{-1}C_n Y_n X_n (I - theta Y_n X_n)^{-1}).
OutputFeedbackController output_feedback_synthesis(const MultiAgentSystem& sys,
                                                   RiskParameter theta,
                                                   const InitialCondition& ic);

std::optional<OutputFeedbackController> try_output_feedback_synthesis(
    const MultiAgentSystem& sys, RiskParameter theta,
    const InitialCondition& ic);

/// Per-agent cost of a full-information solution: Tr((W_n + eps Z_n) X).
double full_info_cost(const MultiAgentSystem& sys, const Matrix& X_n);

/// Critical risk parameter theta*(n) for perfect measurements, located by
/// bisection on the solvability of the control GARE. The bracket starts at
/// [0, 1] and the upper end doubles until the predicate fails; the result
/// is the bracket midpoint once its width is <= tol. Returns +infinity if
/// no failure is found while doubling.
double theta_star_full(const MultiAgentSystem& sys, double tol);

/// Critical parameter theta_I*(n) for output feedback: the predicate also
/// requires both GAREs solvable and I - theta Y_n X_n to have only
/// positive eigenvalues.
double theta_star_output(const MultiAgentSystem& sys, double tol);

}  // namespace leqg

#endif  // LEQG_SYNTHESIS_HPP_
