#pragma once

#include "kpnp/linop.hpp"

namespace kpnp {

struct CgOptions {
  double tol = 1e-10;  // relative to the right-hand side norm
  int max_iter = 500;
};

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
};

// Conjugate gradients for SPD systems. x is both warm start and output.
// Throws SolveError when the relative residual fails to reach tol.
inline CgResult cg_solve(const LinearMap& M, const Vec& rhs, Vec& x, CgOptions opts = {}) {
  require(M.rows() == M.cols(), "cg_solve: operator must be square");
  require(rhs.size() == M.rows(), "cg_solve: rhs dimension mismatch");
  if (x.size() != rhs.size()) x.assign(rhs.size(), 0.0);

  double bnorm = nrm2(rhs);
  if (bnorm == 0.0) {
    x.assign(rhs.size(), 0.0);
    return {0, 0.0};
  }

  Vec r = sub(rhs, M(x));
  double rnorm = nrm2(r);
  if (rnorm <= opts.tol * bnorm) return {0, rnorm / bnorm};

  Vec p = r;
  double rs = dot(r, r);
  for (int it = 1; it <= opts.max_iter; ++it) {
    Vec mp = M(p);
    double pmp = dot(p, mp);
    if (!(pmp > 0.0)) throw SolveError("cg_solve: operator not positive definite");
    double alpha = rs / pmp;
    axpy(alpha, p, x);
    axpy(-alpha, mp, r);
    double rs_new = dot(r, r);
    rnorm = std::sqrt(rs_new);
    if (rnorm <= opts.tol * bnorm) return {it, rnorm / bnorm};
    double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  throw SolveError("cg_solve: no convergence after " + std::to_string(opts.max_iter) +
                   " iterations (relative residual " + std::to_string(rnorm / bnorm) + ")");
}

}  // namespace kpnp
