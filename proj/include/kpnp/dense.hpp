#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kpnp/linop.hpp"

namespace kpnp {

// Materializes a matrix-free map column by column. Verification only; the
// library itself never forms dense operators.
inline Eigen::MatrixXd to_dense(const LinearMap& M) {
  Eigen::MatrixXd A(long(M.rows()), long(M.cols()));
  Vec e(M.cols(), 0.0);
  for (std::size_t c = 0; c < M.cols(); ++c) {
    e[c] = 1.0;
    Vec y = M(e);
    for (std::size_t r = 0; r < M.rows(); ++r) A(long(r), long(c)) = y[r];
    e[c] = 0.0;
  }
  return A;
}

inline double dense_sigma_max(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  return A.jacobiSvd().singularValues()(0);
}

inline double dense_norm2(const LinearMap& M) { return dense_sigma_max(to_dense(M)); }

inline double dense_norm_D(const LinearMap& M, const DiagonalWeights& D) {
  return dense_norm2(conjugate_by_sqrt(M, D));
}

}  // namespace kpnp
