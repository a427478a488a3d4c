#include "leqg/synthesis.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "leqg/errors.hpp"

namespace leqg {

namespace {

constexpr double kRankTolFactor = 1e-10;
constexpr int kMaxBisectIters = 60;
constexpr int kMaxDoublings = 60;

// Kalman controllability matrix [B, AB, ..., A^{d-1}B].
Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
  const Eigen::Index d = A.rows();
  Matrix out(d, d * B.cols());
  Matrix cur = B;
  for (Eigen::Index k = 0; k < d; ++k) {
    out.middleCols(k * B.cols(), B.cols()) = cur;
    cur = A * cur;
  }
  return out;
}

bool has_full_row_rank(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (!(smax > 0.0)) {
    return false;
  }
  return sv(std::min<Eigen::Index>(m.rows(), m.cols()) - 1) >
         kRankTolFactor * smax;
}

bool is_controllable(const Matrix& A, const Matrix& B) {
  return has_full_row_rank(controllability_matrix(A, B));
}

bool is_observable(const Matrix& A, const Matrix& C) {
  return is_controllable(A.transpose(), C.transpose());
}

void check_full_info_assumptions(const SystemSpec& spec) {
  if (!is_controllable(spec.A, spec.B)) {
    throw ModelAssumptionError("synthesis: (A, B) is not controllable");
  }
  if (!is_observable(spec.A, spec.Q)) {
    throw ModelAssumptionError("synthesis: (A, Q) is not observable");
  }
}

void check_output_feedback_assumptions(const MultiAgentSystem& sys) {
  const SystemSpec& spec = sys.spec;
  check_full_info_assumptions(spec);
  if (!is_observable(spec.A, spec.C)) {
    throw ModelAssumptionError("synthesis: (A, C) is not observable");
  }
  // Noise pair (A_n, [sqrt(eps) F_n, -G_n]). With epsilon = 0 and n >= 2
  // this loses controllability (the evader noise is shared), which is why
  // output feedback needs eps > 0 there.
  const Eigen::Index nd = sys.state_dim();
  Matrix noise_input(nd, nd + spec.d);
  noise_input.leftCols(nd) = std::sqrt(spec.epsilon) * sys.F_n.dense();
  noise_input.rightCols(spec.d) = -sys.G_n.dense();
  if (!is_controllable(sys.A_n.dense(), noise_input)) {
    throw ModelAssumptionError(
        "synthesis: (A_n, [sqrt(eps) F_n, -G_n]) is not controllable; "
        "output feedback requires eps > 0 for shared evader noise");
  }
}

// n B_n R_n^{-1} B_n' - theta (W_n + eps Z_n)
Matrix control_quadratic_term(const MultiAgentSystem& sys, double theta) {
  const SystemSpec& spec = sys.spec;
  const Matrix BRinvBt =
      spec.B * spec.R.llt().solve(spec.B.transpose());
  return static_cast<double>(sys.n) *
             StructuredMatrix::block_diagonal(sys.n, BRinvBt).dense() -
         theta * sys.noise_intensity();
}

// C_n' V_n^{-1} C_n - theta Q_n / n
Matrix filter_quadratic_term(const MultiAgentSystem& sys, double theta) {
  const SystemSpec& spec = sys.spec;
  const Matrix CtVinvC =
      spec.C.transpose() * spec.V.llt().solve(spec.C);
  return StructuredMatrix::block_diagonal(sys.n, CtVinvC).dense() -
         (theta / static_cast<double>(sys.n)) * sys.Q_n.dense();
}

Matrix feedback_gain(const MultiAgentSystem& sys, const Matrix& X) {
  const SystemSpec& spec = sys.spec;
  const Matrix RinvBt = spec.R.llt().solve(spec.B.transpose());
  return static_cast<double>(sys.n) *
         StructuredMatrix::block_diagonal(sys.n, RinvBt).dense() * X;
}

// Smallest eigenvalue of I - theta Y X, computed through the symmetric
// similarity Y^{1/2} X Y^{1/2} (valid for Y > 0, making the spectrum real).
double min_eig_admissibility(const Matrix& Y, const Matrix& X, double theta) {
  Eigen::SelfAdjointEigenSolver<Matrix> ys(Y);
  const Matrix Yh = ys.operatorSqrt();
  const Matrix inner = 0.5 * (Yh * X * Yh + (Yh * X * Yh).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      Matrix::Identity(Y.rows(), Y.cols()) - theta * inner,
      Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::optional<OutputFeedbackController> synthesize_output_feedback(
    const MultiAgentSystem& sys, double theta, const InitialCondition& ic) {
  const Matrix An = sys.A_n.dense();
  const Matrix Qn_over_n = sys.Q_n.dense() / static_cast<double>(sys.n);

  std::optional<GareSolution> X =
      solve_care(An, control_quadratic_term(sys, theta), Qn_over_n);
  if (!X) {
    return std::nullopt;
  }
  std::optional<GareSolution> Y = solve_filter_care(
      An, filter_quadratic_term(sys, theta), sys.noise_intensity());
  if (!Y) {
    return std::nullopt;
  }
  if (!(min_eig_admissibility(Y->X, X->X, theta) > 0.0)) {
    return std::nullopt;
  }

  const Eigen::Index nd = sys.state_dim();
  const Matrix I = Matrix::Identity(nd, nd);
  const Matrix M = I - theta * Y->X * X->X;
  const Matrix M_inv = M.partialPivLu().solve(I);

  const SystemSpec& spec = sys.spec;
  const Matrix CtVinv = spec.C.transpose() * spec.V.llt().solve(
                            Matrix::Identity(spec.p, spec.p));
  const Matrix L =
      Y->X * StructuredMatrix::block_diagonal(sys.n, CtVinv).dense();
  const Matrix Cn = sys.C_n.dense();

  OutputFeedbackController ctl;
  ctl.X_n = *X;
  ctl.Y_n = *Y;
  ctl.M_inv = M_inv;
  ctl.gain = feedback_gain(sys, X->X) * M_inv;
  ctl.filter_A = An + theta * Y->X * Qn_over_n - L * Cn;
  ctl.filter_B = sys.B_n.dense();
  ctl.filter_L = L;
  ctl.filter_x0 = ic.x_bar_0;
  ctl.cost_per_agent =
      (Y->X * Qn_over_n + L * Cn * Y->X * X->X * M_inv).trace();
  ctl.theta = theta;

  Eigen::SelfAdjointEigenSolver<Matrix> gap(
      0.5 * ((Y->X - ic.Sigma_0) + (Y->X - ic.Sigma_0).transpose()),
      Eigen::EigenvaluesOnly);
  ctl.sigma0_exceeds_Y =
      gap.eigenvalues()(0) < -1e-9 * std::max(1.0, Y->X.norm());
  return ctl;
}

// Shared bisection for the critical parameter: bracket [0, 1], double the
// upper end until the predicate fails, then bisect to tol.
double bisect_critical(const std::function<bool(double)>& admissible,
                       double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("theta_star: tol must be > 0");
  }
  if (!admissible(0.0)) {
    throw ModelAssumptionError(
        "theta_star: synthesis fails already at theta = 0");
  }
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (admissible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxDoublings) {
      return std::numeric_limits<double>::infinity();
    }
  }
  for (int it = 0; it < kMaxBisectIters && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

InitialCondition InitialCondition::line_spread(Eigen::Index n, Eigen::Index d,
                                               double spacing) {
  InitialCondition ic;
  ic.x_bar_0 = Vector::Zero(n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    ic.x_bar_0(i * d) = spacing * static_cast<double>(i + 1);
  }
  ic.Sigma_0 = Matrix::Identity(n * d, n * d);
  return ic;
}

std::optional<FullInfoController> try_full_info_synthesis(
    const MultiAgentSystem& sys, RiskParameter theta) {
  check_full_info_assumptions(sys.spec);

  std::optional<GareSolution> X = solve_care(
      sys.A_n.dense(), control_quadratic_term(sys, theta.theta),
      sys.Q_n.dense() / static_cast<double>(sys.n));
  if (!X) {
    return std::nullopt;
  }

  FullInfoController ctl;
  ctl.K = feedback_gain(sys, X->X);
  ctl.cost_per_agent = full_info_cost(sys, X->X);
  ctl.theta = theta.theta;
  ctl.X_n = std::move(*X);
  return ctl;
}

FullInfoController full_info_synthesis(const MultiAgentSystem& sys,
                                       RiskParameter theta) {
  std::optional<FullInfoController> ctl = try_full_info_synthesis(sys, theta);
  if (!ctl) {
    throw ThetaAboveCriticalError(
        theta.theta,
        "full_info_synthesis: no admissible solution at theta = " +
            std::to_string(theta.theta) + " (theta at or above theta*(n))");
  }
  return std::move(*ctl);
}

std::optional<OutputFeedbackController> try_output_feedback_synthesis(
    const MultiAgentSystem& sys, RiskParameter theta,
    const InitialCondition& ic) {
  check_output_feedback_assumptions(sys);
  return synthesize_output_feedback(sys, theta.theta, ic);
}

OutputFeedbackController output_feedback_synthesis(const MultiAgentSystem& sys,
                                                   RiskParameter theta,
                                                   const InitialCondition& ic) {
  std::optional<OutputFeedbackController> ctl =
      try_output_feedback_synthesis(sys, theta, ic);
  if (!ctl) {
    throw ThetaAboveCriticalError(
        theta.theta,
        "output_feedback_synthesis: no admissible solution at theta = " +
            std::to_string(theta.theta) + " (theta at or above theta_I*(n))");
  }
  return std::move(*ctl);
}

double full_info_cost(const MultiAgentSystem& sys, const Matrix& X_n) {
  return (sys.noise_intensity() * X_n).trace();
}

double theta_star_full(const MultiAgentSystem& sys, double tol) {
  check_full_info_assumptions(sys.spec);
  const Matrix An = sys.A_n.dense();
  const Matrix Qn_over_n = sys.Q_n.dense() / static_cast<double>(sys.n);
  const auto admissible = [&](double theta) {
    return solve_care(An, control_quadratic_term(sys, theta), Qn_over_n)
        .has_value();
  };
  return bisect_critical(admissible, tol);
}

double theta_star_output(const MultiAgentSystem& sys, double tol) {
  check_output_feedback_assumptions(sys);
  const Matrix An = sys.A_n.dense();
  const Matrix Qn_over_n = sys.Q_n.dense() / static_cast<double>(sys.n);
  const Matrix Wc = sys.noise_intensity();
  const auto admissible = [&](double theta) {
    std::optional<GareSolution> X =
        solve_care(An, control_quadratic_term(sys, theta), Qn_over_n);
    if (!X) {
      return false;
    }
    std::optional<GareSolution> Y =
        solve_filter_care(An, filter_quadratic_term(sys, theta), Wc);
    if (!Y) {
      return false;
    }
    return min_eig_admissibility(Y->X, X->X, theta) > 0.0;
  };
  return bisect_critical(admissible, tol);
}

}  // namespace leqg
