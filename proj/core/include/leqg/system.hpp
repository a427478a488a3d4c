#ifndef LEQG_SYSTEM_HPP_
#define LEQG_SYSTEM_HPP_

#include <Eigen/Core>

#include "leqg/kron.hpp"

namespace leqg {

/// Single-agent/evader model data.
///
/// Pursuers:  dx_p = A x_p + B u + sqrt(epsilon) F w_p
/// Evader:    dx_e = A x_e + G w_e
/// Output:    y    = C (x_p - x_e) + H v
///
/// Validated on construction: Q symmetric PSD, R symmetric PD,
/// V = H H' PD, epsilon >= 0, conformable dimensions. The derived noise
/// intensities W = G G', Z = F F', V = H H' are computed once and cached;
/// instances are immutable.
struct SystemSpec {
  Matrix A, B, C, F, G, H, Q, R;
  double epsilon = 0.0;

  // Derived, fixed at construction.
  Matrix W, Z, V;
  Eigen::Index d = 0;  // state dimension
  Eigen::Index m = 0;  // input dimension
  Eigen::Index p = 0;  // output dimension

  SystemSpec(Matrix A_in, Matrix B_in, Matrix C_in, Matrix F_in, Matrix G_in,
             Matrix H_in, Matrix Q_in, Matrix R_in, double epsilon_in);

  /// The recurring integrator example: A = 0, B = C = F = G = H = Q = R = I_d.
  static SystemSpec basic(Eigen::Index d, double epsilon);

  /// Copy with a different pursuer-noise scale.
  SystemSpec with_epsilon(double eps) const;
};

/// Assembled n-agent block system.
///
/// A_n = I_n (x) A (same for B, C, F, Z, V, Q, R), G_n = 1_n (x) G and
/// W_n = G_n G_n' = E_n (x) W. Immutable after construction.
struct MultiAgentSystem {
  SystemSpec spec;
  Eigen::Index n = 0;

  StructuredMatrix A_n, B_n, C_n, F_n, Z_n, V_n, Q_n, R_n;
  StructuredMatrix G_n;  // stacked
  StructuredMatrix W_n;  // E_n (x) W

  MultiAgentSystem(SystemSpec spec_in, Eigen::Index n_in);

  Eigen::Index state_dim() const noexcept { return n * spec.d; }
  Eigen::Index input_dim() const noexcept { return n * spec.m; }
  Eigen::Index output_dim() const noexcept { return n * spec.p; }

  /// W_n + epsilon Z_n, the intensity of the total process noise.
  Matrix noise_intensity() const;
};

/// Builds the n-agent system. Rejects n < 1.
MultiAgentSystem assemble(const SystemSpec& spec, Eigen::Index n);

}  // namespace leqg

#endif  // LEQG_SYSTEM_HPP_
