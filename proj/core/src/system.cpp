#include "leqg/system.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace leqg {

namespace {

void require_square(const Matrix& m, Eigen::Index d, const char* name) {
  if (m.rows() != d || m.cols() != d) {
    throw std::invalid_argument(std::string("SystemSpec: ") + name +
                                " must be " + std::to_string(d) + "x" +
                                std::to_string(d));
  }
}

void require_symmetric(const Matrix& m, const char* name) {
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-10 * scale) {
    throw std::invalid_argument(std::string("SystemSpec: ") + name +
                                " must be symmetric");
  }
}

double min_eig_symmetric(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues()(0);
}

}  // namespace

SystemSpec::SystemSpec(Matrix A_in, Matrix B_in, Matrix C_in, Matrix F_in,
                       Matrix G_in, Matrix H_in, Matrix Q_in, Matrix R_in,
                       double epsilon_in)
    : A(std::move(A_in)),
      B(std::move(B_in)),
      C(std::move(C_in)),
      F(std::move(F_in)),
      G(std::move(G_in)),
      H(std::move(H_in)),
      Q(std::move(Q_in)),
      R(std::move(R_in)),
      epsilon(epsilon_in) {
  d = A.rows();
  require_square(A, d, "A");
  if (B.rows() != d || B.cols() < 1) {
    throw std::invalid_argument("SystemSpec: B must have d rows");
  }
  m = B.cols();
  if (C.cols() != d || C.rows() < 1) {
    throw std::invalid_argument("SystemSpec: C must have d columns");
  }
  p = C.rows();
  require_square(F, d, "F");
  require_square(G, d, "G");
  require_square(H, p, "H");
  require_square(Q, d, "Q");
  require_square(R, m, "R");
  require_symmetric(Q, "Q");
  require_symmetric(R, "R");

  if (epsilon < 0.0) {
    throw std::invalid_argument("SystemSpec: epsilon must be >= 0");
  }

  W = G * G.transpose();
  Z = F * F.transpose();
  V = H * H.transpose();

  if (min_eig_symmetric(Q) < -1e-10 * std::max(1.0, Q.norm())) {
    throw std::invalid_argument(
        "SystemSpec: Q must be positive semidefinite");
  }
  if (min_eig_symmetric(R) <= 1e-12 * std::max(1.0, R.norm())) {
    throw std::invalid_argument("SystemSpec: R must be positive definite");
  }
  if (min_eig_symmetric(V) <= 1e-12 * std::max(1.0, V.norm())) {
    throw std::invalid_argument(
        "SystemSpec: V = HH' must be positive definite");
  }
}

SystemSpec SystemSpec::basic(Eigen::Index d, double epsilon) {
  const Matrix I = Matrix::Identity(d, d);
  return SystemSpec(Matrix::Zero(d, d), I, I, I, I, I, I, I, epsilon);
}

SystemSpec SystemSpec::with_epsilon(double eps) const {
  return SystemSpec(A, B, C, F, G, H, Q, R, eps);
}

MultiAgentSystem::MultiAgentSystem(SystemSpec spec_in, Eigen::Index n_in)
    : spec(std::move(spec_in)),
      n(n_in),
      A_n(StructuredMatrix::block_diagonal(n_in, spec.A)),
      B_n(StructuredMatrix::block_diagonal(n_in, spec.B)),
      C_n(StructuredMatrix::block_diagonal(n_in, spec.C)),
      F_n(StructuredMatrix::block_diagonal(n_in, spec.F)),
      Z_n(StructuredMatrix::block_diagonal(n_in, spec.Z)),
      V_n(StructuredMatrix::block_diagonal(n_in, spec.V)),
      Q_n(StructuredMatrix::block_diagonal(n_in, spec.Q)),
      R_n(StructuredMatrix::block_diagonal(n_in, spec.R)),
      G_n(StructuredMatrix::stacked(n_in, spec.G)),
      W_n(StructuredMatrix::ones_block(n_in, spec.W)) {}

Matrix MultiAgentSystem::noise_intensity() const {
  return W_n.dense() + spec.epsilon * Z_n.dense();
}

MultiAgentSystem assemble(const SystemSpec& spec, Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("assemble: agent count must be >= 1");
  }
  return MultiAgentSystem(spec, n);
}

}  // namespace leqg
