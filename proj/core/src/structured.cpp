#include "leqg/structured.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "leqg/errors.hpp"
#include "leqg/riccati.hpp"

namespace leqg {

namespace {

Matrix symmetric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.operatorSqrt();
}

// Unique positive definite solution of Y T Y = Rhs for T > 0, Rhs >= 0:
// Y = T^{-1/2} (T^{1/2} Rhs T^{1/2})^{1/2} T^{-1/2}.
Matrix solve_quadratic_sqrt(const Matrix& T, const Matrix& Rhs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(T);
  if (!(es.eigenvalues()(0) > 0.0)) {
    throw Error("solve_quadratic_sqrt: middle matrix is not positive definite");
  }
  const Matrix Th = es.operatorSqrt();
  const Matrix Th_inv = es.operatorInverseSqrt();
  const Matrix inner = 0.5 * (Th * Rhs * Th + (Th * Rhs * Th).transpose());
  return Th_inv * symmetric_sqrt(inner) * Th_inv;
}

Matrix control_BRinvBt(const SystemSpec& spec) {
  return spec.B * spec.R.llt().solve(spec.B.transpose());
}

Matrix filter_CtVinvC(const SystemSpec& spec) {
  return spec.C.transpose() * spec.V.llt().solve(spec.C);
}

// Single-agent LQG Riccati solution (theta = 0, n = 1 control equation).
Matrix single_agent_lqg_X(const SystemSpec& spec) {
  std::optional<GareSolution> sol =
      solve_care(spec.A, control_BRinvBt(spec), spec.Q);
  if (!sol) {
    throw ModelAssumptionError(
        "structured: single-agent LQG equation has no solution");
  }
  return sol->X;
}

void require_A_zero(const SystemSpec& spec, const char* where) {
  if (spec.A.norm() > 0.0) {
    throw ModelAssumptionError(std::string(where) + " requires A = 0");
  }
}

}  // namespace

Matrix StructuredControlSolution::assembled() const {
  const double nn = static_cast<double>(n);
  Matrix out =
      StructuredMatrix::block_diagonal(n, X_tilde_1 / nn).dense();
  if (X_hat_1.norm() > 0.0) {
    out += StructuredMatrix::ones_block(n, X_hat_1 / (nn * nn)).dense();
  }
  return out;
}

Matrix StructuredFilterSolution::assembled() const {
  return StructuredMatrix::ones_block(
             n, Y_tilde_1n / std::sqrt(static_cast<double>(n)))
      .dense();
}

StructuredControlSolution lqg_structured_X(const SystemSpec& spec,
                                           Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("lqg_structured_X: n must be >= 1");
  }
  StructuredControlSolution sol;
  sol.X_tilde_1 = single_agent_lqg_X(spec);
  sol.X_hat_1 = Matrix::Zero(spec.d, spec.d);
  sol.n = n;
  sol.cost_per_agent =
      ((spec.W + spec.epsilon * spec.Z) * sol.X_tilde_1).trace();
  return sol;
}

StructuredControlSolution rs_structured_X(const SystemSpec& spec,
                                          Eigen::Index n,
                                          RiskParameter theta) {
  if (n < 1) {
    throw std::invalid_argument("rs_structured_X: n must be >= 1");
  }
  if (spec.epsilon != 0.0) {
    throw EpsilonNotZeroError(
        "rs_structured_X: closed form requires epsilon = 0");
  }

  StructuredControlSolution sol;
  sol.X_tilde_1 = single_agent_lqg_X(spec);

  // Single-agent risk-sensitive solution X_1; X_hat_1 = X_1 - X_tilde_1.
  const Matrix S1 = control_BRinvBt(spec) - theta.theta * spec.W;
  std::optional<GareSolution> x1 = solve_care(spec.A, S1, spec.Q);
  if (!x1) {
    throw ThetaAboveCriticalError(
        theta.theta,
        "rs_structured_X: single-agent equation unsolvable at theta = " +
            std::to_string(theta.theta));
  }
  sol.X_hat_1 = x1->X - sol.X_tilde_1;
  sol.n = n;
  sol.cost_per_agent = (spec.W * x1->X).trace();
  return sol;
}

StructuredFilterSolution rs_structured_filter_Y(const SystemSpec& spec,
                                                Eigen::Index n,
                                                RiskParameter theta) {
  if (n < 1) {
    throw std::invalid_argument("rs_structured_filter_Y: n must be >= 1");
  }
  require_A_zero(spec, "rs_structured_filter_Y");

  const Matrix middle =
      filter_CtVinvC(spec) -
      (theta.theta / static_cast<double>(n)) * spec.Q;
  Eigen::SelfAdjointEigenSolver<Matrix> es(middle, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0.0)) {
    throw ThetaAboveCriticalError(
        theta.theta,
        "rs_structured_filter_Y: C V^{-1} C - (theta/n) Q is not positive "
        "definite");
  }

  StructuredFilterSolution sol;
  sol.Y_tilde_1n =
      solve_quadratic_sqrt(middle, spec.W + spec.epsilon * spec.Z);
  sol.n = n;
  return sol;
}

bool spectral_radius_condition(const Matrix& Y_tilde, const Matrix& X_1,
                               RiskParameter theta, Eigen::Index n) {
  const Matrix prod = theta.theta * Y_tilde * X_1;
  const double rho = prod.eigenvalues().cwiseAbs().maxCoeff();
  return rho < std::sqrt(static_cast<double>(n));
}

double asymptotic_lqg_cost(const SystemSpec& spec, Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("asymptotic_lqg_cost: n must be >= 1");
  }
  require_A_zero(spec, "asymptotic_lqg_cost");

  const Matrix X1 = solve_quadratic_sqrt(control_BRinvBt(spec), spec.Q);
  const Matrix Y1 = solve_quadratic_sqrt(filter_CtVinvC(spec),
                                         spec.W + spec.epsilon * spec.Z);
  return (Y1 * spec.Q).trace() / std::sqrt(static_cast<double>(n)) +
         (spec.W * X1).trace();
}

}  // namespace leqg
