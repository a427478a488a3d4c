#include "leqg/kron.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "leqg/errors.hpp"

namespace leqg {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix ones_matrix(Eigen::Index n) { return Matrix::Ones(n, n); }

StructuredMatrix::StructuredMatrix(Kind kind, Eigen::Index n, Matrix block)
    : kind_(kind), n_(n), block_(std::move(block)) {
  if (n_ < 1) {
    throw std::invalid_argument("StructuredMatrix: copy count must be >= 1");
  }
  if (block_.size() == 0) {
    throw std::invalid_argument("StructuredMatrix: empty block");
  }
}

StructuredMatrix StructuredMatrix::block_diagonal(Eigen::Index n,
                                                  Matrix block) {
  return StructuredMatrix(Kind::kBlockDiagonal, n, std::move(block));
}

StructuredMatrix StructuredMatrix::ones_block(Eigen::Index n, Matrix block) {
  return StructuredMatrix(Kind::kOnesBlock, n, std::move(block));
}

StructuredMatrix StructuredMatrix::stacked(Eigen::Index n, Matrix block) {
  return StructuredMatrix(Kind::kStacked, n, std::move(block));
}

Eigen::Index StructuredMatrix::rows() const noexcept {
  return n_ * block_.rows();
}

Eigen::Index StructuredMatrix::cols() const noexcept {
  return kind_ == Kind::kStacked ? block_.cols() : n_ * block_.cols();
}

Matrix StructuredMatrix::dense() const {
  const Eigen::Index br = block_.rows();
  const Eigen::Index bc = block_.cols();
  switch (kind_) {
    case Kind::kBlockDiagonal: {
      Matrix out = Matrix::Zero(n_ * br, n_ * bc);
      for (Eigen::Index i = 0; i < n_; ++i) {
        out.block(i * br, i * bc, br, bc) = block_;
      }
      return out;
    }
    case Kind::kOnesBlock: {
      Matrix out(n_ * br, n_ * bc);
      for (Eigen::Index i = 0; i < n_; ++i) {
        for (Eigen::Index j = 0; j < n_; ++j) {
          out.block(i * br, j * bc, br, bc) = block_;
        }
      }
      return out;
    }
    case Kind::kStacked: {
      Matrix out(n_ * br, bc);
      for (Eigen::Index i = 0; i < n_; ++i) {
        out.block(i * br, 0, br, bc) = block_;
      }
      return out;
    }
  }
  throw std::logic_error("StructuredMatrix: unknown kind");
}

namespace {

constexpr double kEigvecCondLimit = 1e8;

// Eigenvalues of a matrix that must be diagonalizable; the hypothesis is
// checked through the condition number of the eigenvector matrix.
Eigen::VectorXcd checked_eigenvalues(const Matrix& m, const char* label) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw NonDiagonalizableError(std::string(label) +
                                 ": eigendecomposition failed");
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0) || smax / smin > kEigvecCondLimit) {
    throw NonDiagonalizableError(
        std::string(label) +
        ": eigenvector matrix condition number exceeds 1e8");
  }
  return es.eigenvalues();
}

}  // namespace

StructuredSpectrum struct_eigs(const Matrix& m, const Matrix& coupling,
                               Eigen::Index n) {
  if (m.rows() != m.cols() || coupling.rows() != coupling.cols() ||
      m.rows() != coupling.rows()) {
    throw std::invalid_argument("struct_eigs: blocks must be square and of "
                                "equal size");
  }
  if (n < 1) {
    throw std::invalid_argument("struct_eigs: n must be >= 1");
  }

  const Eigen::VectorXcd bulk = checked_eigenvalues(m, "struct_eigs: M");
  const Eigen::VectorXcd coupled =
      checked_eigenvalues(m + coupling, "struct_eigs: M+N");

  StructuredSpectrum out;
  out.n = n;
  out.coupled_eigenvalues = coupled;
  out.bulk_eigenvalues.resize((n - 1) * m.rows());
  Eigen::Index k = 0;
  for (Eigen::Index rep = 0; rep + 1 < n; ++rep) {
    for (Eigen::Index i = 0; i < bulk.size(); ++i) {
      out.bulk_eigenvalues(k++) = bulk(i);
    }
  }
  return out;
}

}  // namespace leqg
