#include "leqg/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "leqg/errors.hpp"

namespace leqg {

namespace {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;

// Numerical thresholds backing the solution contract.
constexpr double kResidualContract = 1e-9;   // * max(1, ||X||_F)
constexpr double kRefineTarget = 1e-13;      // Newton stop, * max(1, ||X||_F)
constexpr double kPdTolFactor = 1e-10;       // * ||X||_2
constexpr double kImagAxisTol = 1e-8;        // Hamiltonian eigenvalue test
constexpr double kSubspaceCondLimit = 1e12;  // cond(U1) limit
constexpr int kMaxNewtonIters = 10;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_symmetric_input(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string("solve_care: ") + name +
                                " must be square");
  }
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-8 * scale) {
    throw std::invalid_argument(std::string("solve_care: ") + name +
                                " must be symmetric");
  }
}

Matrix riccati_residual(const Matrix& A, const Matrix& S, const Matrix& Qc,
                        const Matrix& X) {
  return A.transpose() * X + X * A - X * S * X + Qc;
}

double spectral_abscissa(const Matrix& m) {
  return m.eigenvalues().real().maxCoeff();
}

double spectral_norm_symmetric(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Swaps the adjacent diagonal entries (k, k+1) of the complex Schur form T
// by a unitary similarity, accumulating into U. Standard 2x2 exchange: the
// rotation maps the eigenvector [t12, t22 - t11]' of the trailing
// eigenvalue onto e1.
void swap_adjacent(MatrixXc& T, MatrixXc& U, Eigen::Index k) {
  const Complex t11 = T(k, k);
  const Complex t12 = T(k, k + 1);
  const Complex t22 = T(k + 1, k + 1);

  const Complex v0 = t12;
  const Complex v1 = t22 - t11;
  const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
  if (!(nrm > 0.0)) {
    return;  // identical eigenvalues; nothing to exchange
  }

  Eigen::Matrix2cd rot;
  rot << v0 / nrm, -std::conj(v1) / nrm, v1 / nrm, std::conj(v0) / nrm;

  T.middleRows(k, 2) = rot.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * rot;
  U.middleCols(k, 2) = U.middleCols(k, 2) * rot;
  T(k + 1, k) = Complex(0.0, 0.0);
}

// Reorders the Schur form so that the entries flagged in `select` occupy
// the leading diagonal positions (bubble pass preserving relative order).
void reorder_schur(MatrixXc& T, MatrixXc& U, std::vector<bool>& select) {
  const Eigen::Index n = T.rows();
  Eigen::Index front = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!select[static_cast<std::size_t>(i)]) {
      continue;
    }
    for (Eigen::Index k = i; k > front; --k) {
      swap_adjacent(T, U, k - 1);
      std::swap(select[static_cast<std::size_t>(k - 1)],
                select[static_cast<std::size_t>(k)]);
    }
    ++front;
  }
}

// One Newton step direction for the GARE residual: solves the Lyapunov
// equation (A - SX)' D + D (A - SX) + R = 0.
void newton_refine(const Matrix& A, const Matrix& S, const Matrix& Qc,
                   Matrix& X) {
  Matrix best = X;
  double best_res = riccati_residual(A, S, Qc, X).norm();
  for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
    const double target = kRefineTarget * std::max(1.0, X.norm());
    if (best_res <= target) {
      break;
    }
    const Matrix closed = A - S * X;
    const Matrix res = riccati_residual(A, S, Qc, X);
    Matrix step;
    try {
      step = solve_lyapunov(closed, res);
    } catch (const Error&) {
      break;  // closed loop too close to singular pairing; keep best
    }
    X = symmetrize(X + step);
    const double res_norm = riccati_residual(A, S, Qc, X).norm();
    if (res_norm < best_res) {
      best = X;
      best_res = res_norm;
    } else {
      break;
    }
  }
  X = best;
}

struct SubspaceSolution {
  Matrix X;
  double axis_margin = 0.0;  // min |Re lambda| over the Hamiltonian spectrum
};

// Invariant-subspace extraction from the Hamiltonian [[A, -S], [-Qc, -A']].
// stable_subspace selects Re < 0 (the stabilizing solution) or Re > 0 (the
// anti-stabilizing one). Returns nullopt for axis eigenvalues or a subspace
// of the wrong dimension; throws IllConditionedError when U1 cannot be
// inverted reliably.
std::optional<SubspaceSolution> hamiltonian_solution(const Matrix& A,
                                                     const Matrix& S,
                                                     const Matrix& Qc,
                                                     bool stable_subspace) {
  const Eigen::Index n = A.rows();

  Matrix H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A;
  H.topRightCorner(n, n) = -S;
  H.bottomLeftCorner(n, n) = -Qc;
  H.bottomRightCorner(n, n) = -A.transpose();

  Eigen::ComplexSchur<MatrixXc> schur(H.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    throw IllConditionedError("solve_care: Schur decomposition failed");
  }
  MatrixXc T = schur.matrixT();
  MatrixXc U = schur.matrixU();

  const double axis_tol = kImagAxisTol * std::max(1.0, H.norm());
  std::vector<bool> select(static_cast<std::size_t>(2 * n));
  Eigen::Index selected = 0;
  double axis_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol) {
      return std::nullopt;  // eigenvalue on the imaginary axis
    }
    axis_margin = std::min(axis_margin, std::abs(re));
    const bool pick = stable_subspace ? (re < 0.0) : (re > 0.0);
    select[static_cast<std::size_t>(i)] = pick;
    selected += pick ? 1 : 0;
  }
  if (selected != n) {
    return std::nullopt;
  }

  reorder_schur(T, U, select);

  const MatrixXc U1 = U.topLeftCorner(n, n);
  const MatrixXc U2 = U.bottomLeftCorner(n, n);

  Eigen::JacobiSVD<MatrixXc> svd(U1);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  if (!(smin > 0.0) || smax / smin > kSubspaceCondLimit) {
    throw IllConditionedError(
        "solve_care: invariant-subspace extraction is ill conditioned");
  }

  // X = U2 U1^{-1}, via U1' X' = U2' (plain transpose; X is real symmetric
  // up to rounding).
  const MatrixXc Xc =
      U1.transpose().partialPivLu().solve(U2.transpose()).transpose();
  return SubspaceSolution{symmetrize(Xc.real()), axis_margin};
}

struct Candidate {
  Matrix X;
  double residual_norm;
  double min_eigenvalue;
  double abscissa;
  double axis_margin;
  bool positive_definite;
};

std::optional<Candidate> make_candidate(const Matrix& A, const Matrix& S,
                                        const Matrix& Qc,
                                        bool stable_subspace) {
  std::optional<SubspaceSolution> sub =
      hamiltonian_solution(A, S, Qc, stable_subspace);
  if (!sub) {
    return std::nullopt;
  }
  Matrix X = sub->X;
  newton_refine(A, S, Qc, X);

  Candidate c;
  c.X = X;
  c.residual_norm = riccati_residual(A, S, Qc, X).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues()(0);
  c.abscissa = spectral_abscissa(A - S * X);
  c.axis_margin = sub->axis_margin;
  const double norm2 = es.eigenvalues().cwiseAbs().maxCoeff();
  c.positive_definite = c.min_eigenvalue > kPdTolFactor * norm2;
  return c;
}

// Smallest residual magnitude that can be certified in double precision
// for a candidate of this size; dominated by cancellation in X S X.
double residual_noise_floor(const Matrix& A, const Matrix& S,
                            const Matrix& Qc, const Matrix& X) {
  const double nx = X.norm();
  return std::numeric_limits<double>::epsilon() *
         (2.0 * A.norm() * nx + S.norm() * nx * nx + Qc.norm());
}

GareSolution to_solution(const Candidate& c) {
  GareSolution sol;
  sol.X = c.X;
  sol.residual_norm = c.residual_norm;
  sol.min_eigenvalue = c.min_eigenvalue;
  sol.closed_loop_spectral_abscissa = c.abscissa;
  return sol;
}

}  // namespace

Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
  if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows()) {
    throw std::invalid_argument(
        "solve_lyapunov: A and C must be square and of equal size");
  }
  const Eigen::Index n = A.rows();

  Eigen::ComplexSchur<MatrixXc> schur(A.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    throw Error("solve_lyapunov: Schur decomposition failed");
  }
  const MatrixXc& T = schur.matrixT();
  const MatrixXc& U = schur.matrixU();

  // A'P + PA = -C  =>  T* D + D T = E with D = U* P U, E = -U* C U.
  const MatrixXc E = -U.adjoint() * C.cast<Complex>() * U;
  MatrixXc D(n, n);
  const double scale = std::max(1.0, A.norm());
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = E.col(j);
    for (Eigen::Index k = 0; k < j; ++k) {
      rhs -= D.col(k) * T(k, j);
    }
    // (T* + T(j,j) I) is lower triangular; forward substitution.
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex acc = rhs(i);
      for (Eigen::Index k = 0; k < i; ++k) {
        acc -= std::conj(T(k, i)) * D(k, j);
      }
      const Complex pivot = std::conj(T(i, i)) + T(j, j);
      if (std::abs(pivot) <= 1e-14 * scale) {
        throw Error("solve_lyapunov: eigenvalue pairing is singular");
      }
      D(i, j) = acc / pivot;
    }
  }
  const MatrixXc P = U * D * U.adjoint();
  return 0.5 * (P.real() + P.real().transpose());
}

std::optional<GareSolution> solve_care(const Matrix& A, const Matrix& S,
                                       const Matrix& Qc) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("solve_care: A must be square");
  }
  require_symmetric_input(S, "S");
  require_symmetric_input(Qc, "Qc");
  if (S.rows() != A.rows() || Qc.rows() != A.rows()) {
    throw std::invalid_argument("solve_care: dimension mismatch");
  }
  const Matrix Ss = symmetrize(S);
  const Matrix Qs = symmetrize(Qc);

  std::optional<Candidate> cand = make_candidate(A, Ss, Qs, true);
  if (!cand || !cand->positive_definite || !(cand->abscissa < 0.0)) {
    return std::nullopt;
  }
  const double contract = kResidualContract * std::max(1.0, cand->X.norm());
  if (cand->residual_norm > contract) {
    // Two legitimate reasons to refuse certification: the solution is
    // blowing up toward the existence boundary (the contract sits below
    // the evaluation noise floor for X of this size), or the Hamiltonian
    // spectrum is close to the axis. Both mean theta is numerically at
    // the boundary: report non-existence. Anything else is a genuine
    // numerical failure.
    const double noise = residual_noise_floor(A, Ss, Qs, cand->X);
    const double scale = std::max(1.0, A.norm() + Ss.norm() + Qs.norm());
    if (noise > 0.25 * contract || cand->axis_margin <= 1e-6 * scale) {
      return std::nullopt;
    }
    throw IllConditionedError(
        "solve_care: refined residual exceeds the solution contract");
  }
  return to_solution(*cand);
}

std::optional<GareSolution> solve_filter_care(const Matrix& A, const Matrix& T,
                                              const Matrix& Wc) {
  // Duality: Y A' + A Y - Y T Y + Wc = 0 is the control equation on A'.
  std::optional<GareSolution> stab = solve_care(A.transpose(), T, Wc);
  if (!stab) {
    return std::nullopt;
  }

  // Minimal positive definite solution: if the anti-stabilizing solution
  // is also positive definite and Loewner-below the stabilizing one,
  // return it instead.
  std::optional<Candidate> anti;
  try {
    anti = make_candidate(A.transpose(), symmetrize(T), symmetrize(Wc), false);
  } catch (const IllConditionedError&) {
    anti.reset();
  }
  if (anti && anti->positive_definite) {
    const Matrix gap = symmetrize(stab->X - anti->X);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gap, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, stab->X.norm());
    const bool below = es.eigenvalues()(0) >= -1e-9 * scale;
    const bool distinct = gap.norm() > 1e-9 * scale;
    if (below && distinct &&
        anti->residual_norm <=
            kResidualContract * std::max(1.0, anti->X.norm())) {
      return to_solution(*anti);
    }
  }
  return stab;
}

bool is_stabilizing(const Matrix& A, const Matrix& S, const Matrix& X) {
  return spectral_abscissa(A - S * X) < 0.0;
}

}  // namespace leqg
