#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kpnp/forward.hpp"
#include "kpnp/linop.hpp"
#include "kpnp/operators.hpp"

namespace kpnp {

struct BoundReport {
  double squared_bound = 1.0;
  double bound = 1.0;  // sqrt of squared_bound; compare against measured norms
  std::string formula_id;
};

inline BoundReport finish_bound(double squared, std::string id) {
  BoundReport r;
  r.squared_bound = squared;
  r.bound = std::sqrt(std::max(0.0, squared));
  r.formula_id = std::move(id);
  return r;
}

// Splits a product norm along the dominant eigenvector of the left factor:
// ||MN||^2 <= (l1^2 - l2^2) * ||N q1||^2 + l2^2, where l1 >= l2 are the two
// largest eigenvalue magnitudes of M and q1 the dominant eigenvector.
inline double spectral_split_bound(double lambda1, double lambda2, double norm_Nq1_sq) {
  if (!(std::abs(lambda1) >= std::abs(lambda2)))
    throw ConfigError("spectral_split_bound: need |lambda1| >= |lambda2|");
  if (!(norm_Nq1_sq >= 0.0 && norm_Nq1_sq <= 1.0))
    throw ConfigError("spectral_split_bound: norm_Nq1_sq must lie in [0, 1]");
  return (lambda1 * lambda1 - lambda2 * lambda2) * norm_Nq1_sq + lambda2 * lambda2;
}

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw ConfigError("bound: gamma must lie in (0, 2)");
}
inline void check_rho(double rho) {
  if (!(rho > 0.0)) throw ConfigError("bound: rho must be positive");
}
inline void check_lambda(double l, const char* name) {
  if (!(l >= 0.0 && l < 1.0))
    throw ConfigError(std::string("bound: ") + name + " must lie in [0, 1)");
}
inline void check_mu(double mu) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("bound: mu must lie in (0, 1]");
}
inline void check_normD(double normD) {
  if (!(normD >= 1.0)) throw ConfigError("bound: ||D|| must be >= 1 (rows include the diagonal)");
}

// Shared factor 1 - (1/||D||) g (2-g) mu; both the scaled-data-step bound
// and the scaled gradient-step bound reduce to this expression, which keeps
// them bit-identical.
inline double scaled_data_factor(double gamma, double normD, double mu) {
  return 1.0 - (1.0 / normD) * gamma * (2.0 - gamma) * mu;
}

}  // namespace detail

// Upper bound on ||(I - g D^{-1}A'A) q1||_D^2 along the constant direction
// q1 = e/||e||_D, in terms of ||Ae||^2.
inline double data_step_constants_bound(double gamma, double normD, double norm_Ae_sq,
                                        std::size_t n) {
  detail::check_gamma(gamma);
  detail::check_normD(normD);
  require(n > 0 && norm_Ae_sq >= 0.0, "data_step_constants_bound: bad inputs");
  return detail::scaled_data_factor(gamma, normD, norm_Ae_sq / double(n));
}

// Bound on ||W(I - g D^{-1}A'A)||_D^2 for a plain kernel denoiser; mu is the
// sampling ratio (1 for deblurring).
inline BoundReport bound_ista_scaled(double lambda2, double gamma, double mu, double normD) {
  detail::check_lambda(lambda2, "lambda2");
  detail::check_gamma(gamma);
  detail::check_mu(mu);
  detail::check_normD(normD);
  double sq = spectral_split_bound(1.0, lambda2, detail::scaled_data_factor(gamma, normD, mu));
  return finish_bound(sq, "ista_scaled");
}

// Bound on ||W(I - g A'A)||_2 for a symmetric (doubly stochastic) denoiser:
// the deblurring form uses (1-g)^2, the sampled forms use 1 - g(2-g)mu.
inline BoundReport bound_ista_plain(TaskKind task, double lambda2, double gamma, double mu) {
  detail::check_lambda(lambda2, "lambda2");
  detail::check_gamma(gamma);
  double factor;
  std::string id;
  if (task == TaskKind::deblur) {
    factor = (1.0 - gamma) * (1.0 - gamma);
    id = "ista_sym_deblur";
  } else {
    detail::check_mu(mu);
    factor = 1.0 - gamma * (2.0 - gamma) * mu;
    id = task == TaskKind::inpaint ? "ista_sym_inpaint" : "ista_sym_superres";
  }
  return finish_bound(spectral_split_bound(1.0, lambda2, factor), id);
}

// Bound on ||admm_reflection||_2 for a symmetric denoiser. Only the
// deblurring and inpainting forms exist; subsampled deblurring has no
// closed form in this family.
inline BoundReport bound_admm_sym(TaskKind task, double zeta_star, double rho, double mu) {
  detail::check_lambda(zeta_star, "zeta_star");
  detail::check_rho(rho);
  double factor;
  std::string id;
  if (task == TaskKind::deblur) {
    double r = (1.0 - rho) / (1.0 + rho);
    factor = r * r;
    id = "admm_sym_deblur";
  } else if (task == TaskKind::inpaint) {
    detail::check_mu(mu);
    factor = 1.0 - 4.0 * mu * rho / ((1.0 + rho) * (1.0 + rho));
    id = "admm_sym_inpaint";
  } else {
    throw ConfigError("bound_admm_sym: no closed form for subsampled deblurring");
  }
  return finish_bound(spectral_split_bound(1.0, zeta_star, factor), id);
}

// max_i (1 - r/d_i)/(1 + r/d_i); the max runs over every diagonal entry.
inline double theta_from_D(const DiagonalWeights& D, double rho) {
  detail::check_rho(rho);
  double theta = -1.0;
  for (double d : D.d) {
    double t = rho / d;
    theta = std::max(theta, (1.0 - t) / (1.0 + t));
  }
  return theta;
}

// Bound on ||admm_reflection_scaled||_D for inpainting.
inline BoundReport bound_admm_scaled_inpaint(double zeta_star, double rho, double theta,
                                             double mu, double normD) {
  detail::check_lambda(zeta_star, "zeta_star");
  detail::check_rho(rho);
  detail::check_mu(mu);
  detail::check_normD(normD);
  if (!(theta < 1.0)) throw ConfigError("bound_admm_scaled_inpaint: theta must be < 1");
  double factor = 1.0 - (1.0 - theta * theta) * mu / normD;
  return finish_bound(spectral_split_bound(1.0, zeta_star, factor), "admm_scaled_inpaint");
}

// Bound on ||admm_reflection_scaled||_D for deblurring and subsampled
// deblurring; carries an extra 1/n factor relative to the inpainting form.
inline BoundReport bound_admm_scaled_smooth(TaskKind task, double zeta_star, double rho,
                                            double mu, double normD, std::size_t n) {
  detail::check_lambda(zeta_star, "zeta_star");
  detail::check_rho(rho);
  detail::check_normD(normD);
  require(n > 0, "bound_admm_scaled_smooth: n must be positive");
  double gain = 4.0 * rho / ((1.0 + rho) * (1.0 + rho)) / (double(n) * normD * normD);
  double factor;
  std::string id;
  if (task == TaskKind::deblur) {
    factor = 1.0 - gain;
    id = "admm_scaled_deblur";
  } else if (task == TaskKind::superres) {
    detail::check_mu(mu);
    factor = 1.0 - mu * gain;
    id = "admm_scaled_superres";
  } else {
    throw ConfigError("bound_admm_scaled_smooth: use the inpainting-specific bound");
  }
  return finish_bound(spectral_split_bound(1.0, zeta_star, factor), id);
}

// Closed form of prox_reflection applied to the all-ones vector:
// e - (2r/(1+r)) diag(A) for inpainting, ((1-r)/(1+r)) e for deblurring.
inline Vec fe_closed_form(const ForwardModel& fm, double rho) {
  detail::check_rho(rho);
  std::size_t n = fm.n();
  if (fm.kind == TaskKind::inpaint) {
    double c = 2.0 * rho / (1.0 + rho);
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 - c * double(fm.mask[i]);
    return v;
  }
  if (fm.kind == TaskKind::deblur) {
    return Vec(n, (1.0 - rho) / (1.0 + rho));
  }
  throw ConfigError("fe_closed_form: no closed form for subsampled deblurring");
}

// Cross-checks the closed form against the operator built from CG.
inline Vec fe_checked(const ForwardModel& fm, double rho, double tol = 1e-9) {
  Vec closed = fe_closed_form(fm, rho);
  LinearMap F = prox_reflection_map(fm.A, rho);
  Vec applied = F(ones(fm.n()));
  double defect = 0.0;
  for (std::size_t i = 0; i < closed.size(); ++i)
    defect = std::max(defect, std::abs(closed[i] - applied[i]));
  if (defect > tol)
    throw VerifyError("fe_checked: closed form and operator disagree by " +
                      std::to_string(defect));
  return closed;
}

// Non-contractive instance: averaging measurement A = (1/n)ee', a denoiser
// that pools the first n-1 pixels and isolates the last. The weighted
// operator norm of the update step has the exact value
// (1/n) sqrt(2n^2 - 4n + 4), which exceeds 1 for every n in [3, 64].
inline double counterexample_closed_form(std::size_t n) {
  require(n >= 2, "counterexample: n must be >= 2");
  double nn = double(n);
  return std::sqrt(2.0 * nn * nn - 4.0 * nn + 4.0) / nn;
}

inline double counterexample_norm(std::size_t n, double tol = 1e-10) {
  require(n >= 2, "counterexample: n must be >= 2");
  const long ln = long(n);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ln, ln);
  K.topLeftCorner(ln - 1, ln - 1).setOnes();
  K(ln - 1, ln - 1) = 1.0;
  Eigen::VectorXd d = K.rowwise().sum();  // (n-1, ..., n-1, 1)
  Eigen::MatrixXd W = d.cwiseInverse().asDiagonal() * K;
  // A = (1/n)ee' is symmetric idempotent, so I - A'A = I - A.
  Eigen::MatrixXd IA =
      Eigen::MatrixXd::Identity(ln, ln) - Eigen::MatrixXd::Constant(ln, ln, 1.0 / double(n));
  Eigen::MatrixXd M = W * IA;
  Eigen::VectorXd dh = d.cwiseSqrt();
  Eigen::MatrixXd Msim = dh.asDiagonal() * M * dh.cwiseInverse().asDiagonal();
  double measured = Msim.jacobiSvd().singularValues()(0);
  double closed = counterexample_closed_form(n);
  if (std::abs(measured - closed) > tol)
    throw VerifyError("counterexample_norm: dense value " + std::to_string(measured) +
                      " does not match closed form " + std::to_string(closed));
  return measured;
}

}  // namespace kpnp
