#ifndef LEQG_RICCATI_HPP_
#define LEQG_RICCATI_HPP_

#include <optional>

#include <Eigen/Core>

#include "leqg/kron.hpp"

namespace leqg {

/// A stabilizing positive-definite Riccati solution with diagnostics.
struct GareSolution {
  Matrix X;
  double residual_norm = 0.0;      // ||A'X + XA - XSX + Q||_F
  double min_eigenvalue = 0.0;     // smallest eigenvalue of X
  double closed_loop_spectral_abscissa = 0.0;  // max Re eig(A - SX)
};

/// Solves the generalized algebraic Riccati equation
///
///   A'X + XA - X S X + Qc = 0,
///
/// where S may be sign-indefinite, for the stabilizing solution with
/// X > 0. Method: stable invariant subspace of the Hamiltonian
/// [[A, -S], [-Qc, -A']] via an ordered complex Schur decomposition,
/// followed by Newton refinement of the residual.
///
/// Returns nullopt ("no solution") when the Hamiltonian has eigenvalues on
/// the imaginary axis or the candidate fails the positivity/stabilization
/// checks. Throws IllConditionedError when the subspace extraction is too
/// poorly conditioned to trust either answer.
std::optional<GareSolution> solve_care(const Matrix& A, const Matrix& S,
                                       const Matrix& Qc);

/// Solves the filter-form equation Y A' + A Y - Y T Y + Wc = 0 by duality
/// (it is solve_care on A'). When both the stabilizing and the
/// anti-stabilizing solution are positive definite, the Loewner-smaller of
/// the two is returned (the minimal positive definite solution).
std::optional<GareSolution> solve_filter_care(const Matrix& A,
                                              const Matrix& T,
                                              const Matrix& Wc);

/// True iff A - S X is Hurwitz.
bool is_stabilizing(const Matrix& A, const Matrix& S, const Matrix& X);

/// Solves the continuous Lyapunov equation A'P + PA + C = 0 for general
/// square A (Bartels-Stewart on the complex Schur form). Throws Error when
/// an eigenvalue pairing lambda_i + conj(lambda_j) is numerically zero.
Matrix solve_lyapunov(const Matrix& A, const Matrix& C);

}  // namespace leqg

#endif  // LEQG_RICCATI_HPP_
