#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kpnp/cg.hpp"
#include "kpnp/denoiser.hpp"
#include "kpnp/forward.hpp"
#include "kpnp/image.hpp"
#include "kpnp/linop.hpp"

namespace kpnp {

// Quadratic data term f(x) = 0.5 ||Ax - b||^2.
struct LossSpec {
  ForwardModel model;
  Vec b;

  void validate() const {
    require(b.size() == model.m(), "LossSpec: measurement dimension mismatch");
  }
};

inline Vec grad_f(const LossSpec& loss, const Vec& x) {
  require(x.size() == loss.model.n(), "grad_f: dimension mismatch");
  Vec r = loss.model.A(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= loss.b[i];
  return loss.model.A.adjoint(r);
}

inline double loss_value(const LossSpec& loss, const Vec& x) {
  Vec r = loss.model.A(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= loss.b[i];
  return 0.5 * dot(r, r);
}

// Proximal map of rho*f in the D-weighted metric: the minimizer of
// 0.5||z - v||_D^2 + rho*f(z), i.e. the SPD system (D + rho A'A) z = Dv +
// rho A'b solved by CG. D = I gives the Euclidean prox.
inline Vec d_prox_f(const LossSpec& loss, const DiagonalWeights& D, double rho, const Vec& v,
                    CgOptions cg = {1e-10, 500}, Vec* warm = nullptr, long* cg_iters = nullptr) {
  require(rho >= 0.0, "d_prox_f: rho must be nonnegative");
  require(v.size() == loss.model.n(), "d_prox_f: dimension mismatch");
  if (rho == 0.0) return v;
  std::size_t n = loss.model.n();
  LinearMap sys = add_maps(diagonal_map(D.d), compose(loss.model.A.transposed(), loss.model.A),
                           1.0, rho);
  Vec rhs = D.apply(v);
  axpy(rho, loss.model.A.adjoint(loss.b), rhs);
  Vec z = warm ? *warm : v;
  if (z.size() != n) z = v;
  CgResult res = cg_solve(sys, rhs, z, cg);
  if (cg_iters) *cg_iters += res.iterations;
  if (warm) *warm = z;
  return z;
}

enum class PnpAlgorithm { pnp_ista, pnp_admm, sc_pnp_ista, sc_pnp_admm };

inline std::string pnp_algorithm_name(PnpAlgorithm a) {
  switch (a) {
    case PnpAlgorithm::pnp_ista: return "pnp_ista";
    case PnpAlgorithm::pnp_admm: return "pnp_admm";
    case PnpAlgorithm::sc_pnp_ista: return "sc_pnp_ista";
    case PnpAlgorithm::sc_pnp_admm: return "sc_pnp_admm";
  }
  throw ConfigError("pnp_algorithm_name: invalid algorithm");
}

inline PnpAlgorithm pnp_algorithm_from_name(const std::string& s) {
  if (s == "pnp_ista") return PnpAlgorithm::pnp_ista;
  if (s == "pnp_admm") return PnpAlgorithm::pnp_admm;
  if (s == "sc_pnp_ista") return PnpAlgorithm::sc_pnp_ista;
  if (s == "sc_pnp_admm") return PnpAlgorithm::sc_pnp_admm;
  throw ConfigError("unknown algorithm '" + s + "'");
}

enum class InitRule { guide, zero, random, adjoint, image };

inline InitRule init_rule_from_name(const std::string& s) {
  if (s == "guide") return InitRule::guide;
  if (s == "zero") return InitRule::zero;
  if (s == "random") return InitRule::random;
  if (s == "adjoint") return InitRule::adjoint;
  if (s == "image") return InitRule::image;
  throw ConfigError("unknown init rule '" + s + "'");
}

struct SolverConfig {
  PnpAlgorithm algorithm = PnpAlgorithm::sc_pnp_ista;
  double gamma = 1.0;  // ISTA variants
  double rho = 1.0;    // ADMM variants
  int max_iters = 1000;
  double stop_tol = 1e-9;  // relative successive-iterate change
  CgOptions cg{1e-10, 500};
  InitRule init = InitRule::guide;
  Vec init_image;  // used when init == image
  std::uint64_t init_seed = 777;

  void validate() const {
    bool ista =
        algorithm == PnpAlgorithm::pnp_ista || algorithm == PnpAlgorithm::sc_pnp_ista;
    if (ista && !(gamma > 0.0 && gamma < 2.0))
      throw ConfigError("solver: gamma must lie in (0, 2)");
    if (!ista && !(rho > 0.0)) throw ConfigError("solver: rho must be positive");
    if (max_iters < 1) throw ConfigError("solver: max_iters must be >= 1");
    if (!(stop_tol > 0.0)) throw ConfigError("solver: stop_tol must be positive");
  }
};

struct TrajectoryPoint {
  int k = 0;
  double residual = 0.0;      // successive-iterate norm (D-weighted for scaled variants)
  double rel_residual = 0.0;  // residual / previous-iterate norm
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double u_residual = std::numeric_limits<double>::quiet_NaN();  // ADMM internal iterate
  long cum_cg_iters = 0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  Vec final_x;  // x for ISTA variants, y for ADMM variants
  std::string termination;  // "converged" or "max_iters"
  bool converged = false;
  int iterations = 0;
  long total_cg_iters = 0;
};

inline Vec initial_iterate(const LossSpec& loss, const SolverConfig& cfg) {
  switch (cfg.init) {
    case InitRule::guide: return make_guide(loss.model, loss.b).data;
    case InitRule::zero: return Vec(loss.model.n(), 0.0);
    case InitRule::random: {
      Rng rng(cfg.init_seed);
      return rng.uniform_vec(loss.model.n());
    }
    case InitRule::adjoint: return loss.model.A.adjoint(loss.b);
    case InitRule::image:
      require(cfg.init_image.size() == loss.model.n(), "solver: init image size mismatch");
      return cfg.init_image;
  }
  throw ConfigError("solver: invalid init rule");
}

namespace detail {

inline double variant_norm(const Vec& v, const DiagonalWeights& D, bool scaled) {
  return scaled ? d_norm(v, D) : nrm2(v);
}

}  // namespace detail

// Fixed-point iteration x <- W(x - g S grad f(x)) with S = I (plain) or
// S = D^{-1} (scaled). The denoiser is applied as a frozen linear map.
inline Trajectory run_ista(const LossSpec& loss, const KernelDenoiser& den,
                           const SolverConfig& cfg, bool scaled, const Vec* psnr_ref) {
  loss.validate();
  cfg.validate();
  require(den.n() == loss.model.n(), "run_ista: denoiser dimension mismatch");
  DiagonalWeights D = den.D();

  Trajectory traj;
  Vec x = initial_iterate(loss, cfg);
  for (int k = 1; k <= cfg.max_iters; ++k) {
    Vec g = grad_f(loss, x);
    if (scaled) g = D.apply_inv(g);
    Vec step = x;
    axpy(-cfg.gamma, g, step);
    Vec xn = den.apply_W(step);

    Vec diff = sub(xn, x);
    double prev_norm = detail::variant_norm(x, D, scaled);
    double res = detail::variant_norm(diff, D, scaled);
    double rel = res / std::max(prev_norm, 1e-300);

    TrajectoryPoint pt;
    pt.k = k;
    pt.residual = res;
    pt.rel_residual = rel;
    if (psnr_ref) pt.psnr = psnr(xn, *psnr_ref);
    traj.points.push_back(pt);

    x = std::move(xn);
    traj.iterations = k;
    if (rel < cfg.stop_tol) {
      traj.converged = true;
      break;
    }
  }
  traj.final_x = std::move(x);
  traj.termination = traj.converged ? "converged" : "max_iters";
  return traj;
}

// Splitting iteration x = prox(y - z); y = W(x + z); z = z + x - y, with the
// prox in the Euclidean (plain) or D-weighted (scaled) metric. The internal
// iterate u = x + z_prev drives the contraction analysis and is logged
// alongside the y residuals.
inline Trajectory run_admm(const LossSpec& loss, const KernelDenoiser& den,
                           const SolverConfig& cfg, bool scaled, const Vec* psnr_ref) {
  loss.validate();
  cfg.validate();
  require(den.n() == loss.model.n(), "run_admm: denoiser dimension mismatch");
  std::size_t n = loss.model.n();
  DiagonalWeights D = scaled ? den.D() : DiagonalWeights::identity(n);
  DiagonalWeights Dres = den.D();  // norm used for logging scaled variants

  Trajectory traj;
  Vec y = initial_iterate(loss, cfg);
  Vec z(n, 0.0);
  Vec u_prev;
  Vec warm = y;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    Vec v = sub(y, z);
    Vec x = d_prox_f(loss, D, cfg.rho, v, cfg.cg, &warm, &traj.total_cg_iters);
    Vec u = add(x, z);
    Vec yn = den.apply_W(u);
    for (std::size_t i = 0; i < n; ++i) z[i] = z[i] + x[i] - yn[i];

    Vec diff = sub(yn, y);
    double prev_norm = detail::variant_norm(y, Dres, scaled);
    double res = detail::variant_norm(diff, Dres, scaled);
    double rel = res / std::max(prev_norm, 1e-300);

    TrajectoryPoint pt;
    pt.k = k;
    pt.residual = res;
    pt.rel_residual = rel;
    if (psnr_ref) pt.psnr = psnr(yn, *psnr_ref);
    if (!u_prev.empty()) pt.u_residual = detail::variant_norm(sub(u, u_prev), Dres, scaled);
    pt.cum_cg_iters = traj.total_cg_iters;
    traj.points.push_back(pt);

    u_prev = std::move(u);
    y = std::move(yn);
    traj.iterations = k;
    if (rel < cfg.stop_tol) {
      traj.converged = true;
      break;
    }
  }
  traj.final_x = std::move(y);
  traj.termination = traj.converged ? "converged" : "max_iters";
  return traj;
}

inline Trajectory pnp_ista_run(const LossSpec& loss, const KernelDenoiser& den,
                               const SolverConfig& cfg, const Vec* psnr_ref = nullptr) {
  return run_ista(loss, den, cfg, /*scaled=*/false, psnr_ref);
}

inline Trajectory sc_pnp_ista_run(const LossSpec& loss, const KernelDenoiser& den,
                                  const SolverConfig& cfg, const Vec* psnr_ref = nullptr) {
  return run_ista(loss, den, cfg, /*scaled=*/true, psnr_ref);
}

inline Trajectory pnp_admm_run(const LossSpec& loss, const KernelDenoiser& den,
                               const SolverConfig& cfg, const Vec* psnr_ref = nullptr) {
  return run_admm(loss, den, cfg, /*scaled=*/false, psnr_ref);
}

inline Trajectory sc_pnp_admm_run(const LossSpec& loss, const KernelDenoiser& den,
                                  const SolverConfig& cfg, const Vec* psnr_ref = nullptr) {
  return run_admm(loss, den, cfg, /*scaled=*/true, psnr_ref);
}

inline Trajectory run_solver(const LossSpec& loss, const KernelDenoiser& den,
                             const SolverConfig& cfg, const Vec* psnr_ref = nullptr) {
  switch (cfg.algorithm) {
    case PnpAlgorithm::pnp_ista: return pnp_ista_run(loss, den, cfg, psnr_ref);
    case PnpAlgorithm::pnp_admm: return pnp_admm_run(loss, den, cfg, psnr_ref);
    case PnpAlgorithm::sc_pnp_ista: return sc_pnp_ista_run(loss, den, cfg, psnr_ref);
    case PnpAlgorithm::sc_pnp_admm: return sc_pnp_admm_run(loss, den, cfg, psnr_ref);
  }
  throw ConfigError("run_solver: invalid algorithm");
}

}  // namespace kpnp
