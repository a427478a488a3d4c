#ifndef LEQG_TESTS_HELPERS_HPP_
#define LEQG_TESTS_HELPERS_HPP_

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace leqg::test {

inline Eigen::MatrixXd random_matrix(std::mt19937& gen, Eigen::Index rows,
                                     Eigen::Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = u(gen);
    }
  }
  return out;
}

inline Eigen::MatrixXd random_spd(std::mt19937& gen, Eigen::Index d,
                                  double ridge = 0.5) {
  const Eigen::MatrixXd m = random_matrix(gen, d, d);
  return m * m.transpose() + ridge * Eigen::MatrixXd::Identity(d, d);
}

inline std::vector<std::complex<double>> sorted_complex(
    const Eigen::VectorXcd& v) {
  std::vector<std::complex<double>> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) {
      return a.real() < b.real();
    }
    return a.imag() < b.imag();
  });
  return out;
}

/// Largest pairwise distance between two sorted eigenvalue multisets.
inline double multiset_distance(const Eigen::VectorXcd& a,
                                const Eigen::VectorXcd& b) {
  if (a.size() != b.size()) {
    return std::numeric_limits<double>::infinity();
  }
  const auto sa = sorted_complex(a);
  const auto sb = sorted_complex(b);
  double dist = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    dist = std::max(dist, std::abs(sa[i] - sb[i]));
  }
  return dist;
}

}  // namespace leqg::test

#endif  // LEQG_TESTS_HELPERS_HPP_
