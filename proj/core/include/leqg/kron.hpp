#ifndef LEQG_KRON_HPP_
#define LEQG_KRON_HPP_

#include <Eigen/Core>
#include <Eigen/Dense>

namespace leqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Kronecker product A (x) B. Satisfies the mixed-product identity
/// (A (x) B)(C (x) D) = AC (x) BD for conformable factors.
Matrix kron(const Matrix& a, const Matrix& b);

/// E_n = 1_n 1_n', the n x n matrix of ones. E_n^2 = n E_n.
Matrix ones_matrix(Eigen::Index n);

/// A matrix with one of the three Kronecker structures used by the
/// homogeneous n-agent model. Stores the factor block; the dense form is
/// materialized on demand and never cached, so instances are immutable
/// and freely shareable across threads.
class StructuredMatrix {
 public:
  enum class Kind {
    kBlockDiagonal,  // I_n (x) M
    kOnesBlock,      // E_n (x) M
    kStacked,        // 1_n (x) M
  };

  static StructuredMatrix block_diagonal(Eigen::Index n, Matrix block);
  static StructuredMatrix ones_block(Eigen::Index n, Matrix block);
  static StructuredMatrix stacked(Eigen::Index n, Matrix block);

  Kind kind() const noexcept { return kind_; }
  Eigen::Index copies() const noexcept { return n_; }
  const Matrix& block() const noexcept { return block_; }

  Eigen::Index rows() const noexcept;
  Eigen::Index cols() const noexcept;

  /// Entrywise equal to the defining Kronecker product.
  Matrix dense() const;

 private:
  StructuredMatrix(Kind kind, Eigen::Index n, Matrix block);

  Kind kind_;
  Eigen::Index n_;
  Matrix block_;
};

/// Spectrum of I_n (x) M + (E_n / n) (x) N for diagonalizable M and M+N:
/// the eigenvalues of M, each with multiplicity n-1, together with the
/// eigenvalues of M+N.
struct StructuredSpectrum {
  Eigen::VectorXcd bulk_eigenvalues;     // eigs(M), each repeated n-1 times
  Eigen::VectorXcd coupled_eigenvalues;  // eigs(M+N)
  Eigen::Index n = 0;
};

/// Computes StructuredSpectrum for d x d blocks `m` and `coupling` (= N).
/// Throws NonDiagonalizableError if the eigenvector matrix of M or M+N has
/// condition number above 1e8.
StructuredSpectrum struct_eigs(const Matrix& m, const Matrix& coupling,
                               Eigen::Index n);

}  // namespace leqg

#endif  // LEQG_KRON_HPP_
