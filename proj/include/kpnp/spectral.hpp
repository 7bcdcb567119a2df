#pragma once

#include <optional>
#include <string>

#include "kpnp/bounds.hpp"
#include "kpnp/denoiser.hpp"
#include "kpnp/forward.hpp"
#include "kpnp/linop.hpp"
#include "kpnp/operators.hpp"

namespace kpnp {

struct PowerConfig {
  double tol = 1e-8;  // relative change of the eigenvalue estimate
  int max_iter = 5000;
  std::uint64_t seed = 12345;
};

struct SpectralReport {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // ||S v - est v|| at the final iterate (eigen runs)
};

// Largest singular value of op via power iteration on op' op. The estimate
// is the Rayleigh quotient ||op v||^2 at unit v, which is nondecreasing for
// a PSD iteration matrix, so the method approaches the norm from below.
inline SpectralReport power_sigma(const LinearMap& op, PowerConfig cfg = {}) {
  SpectralReport rep;
  Rng rng(cfg.seed);
  Vec v = rng.uniform_vec(op.cols());
  double nv = nrm2(v);
  require(nv > 0.0, "power_sigma: degenerate start vector");
  for (auto& x : v) x /= nv;

  double est = 0.0, prev = -1.0;
  int hits = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    rep.iterations = it;
    Vec mv = op(v);
    est = dot(mv, mv);
    if (est == 0.0) {
      rep.value = 0.0;
      rep.converged = true;
      return rep;
    }
    Vec w = op.adjoint(mv);
    double nw = nrm2(w);
    if (nw == 0.0) {
      rep.value = std::sqrt(est);
      rep.converged = true;
      return rep;
    }
    for (auto& x : w) x /= nw;
    v = std::move(w);
    double rel = std::abs(est - prev) / std::max(est, 1e-300);
    prev = est;
    // two consecutive small steps guard against a lucky plateau crossing
    hits = (it >= 2 && rel < cfg.tol) ? hits + 1 : 0;
    if (hits >= 2) {
      rep.converged = true;
      break;
    }
  }
  {
    Vec mv = op(v);
    Vec w = op.adjoint(mv);
    Vec r = w;
    axpy(-est, v, r);
    rep.residual = nrm2(r);
  }
  rep.value = std::sqrt(std::max(0.0, est));
  return rep;
}

// Weighted operator norm ||op||_D through the similarity D^{1/2} op D^{-1/2}.
inline SpectralReport power_sigma_D(const LinearMap& op, const DiagonalWeights& D,
                                    PowerConfig cfg = {}) {
  return power_sigma(conjugate_by_sqrt(op, D), cfg);
}

// Dominant eigenvalue magnitude of a square operator with real spectrum,
// via plain power iteration with a Rayleigh-quotient estimate. The residual
// field reports ||S v - est v||, which stays large if the dominant part of
// the spectrum is an unexpected complex or plus-minus pair.
inline SpectralReport power_eig_magnitude(const LinearMap& op, PowerConfig cfg = {}) {
  require(op.rows() == op.cols(), "power_eig_magnitude: operator must be square");
  SpectralReport rep;
  Rng rng(cfg.seed);
  Vec v = rng.uniform_vec(op.cols());
  double nv = nrm2(v);
  require(nv > 0.0, "power_eig_magnitude: degenerate start vector");
  for (auto& x : v) x /= nv;

  double est = 0.0, prev = std::numeric_limits<double>::infinity();
  int hits = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    rep.iterations = it;
    Vec w = op(v);
    est = dot(v, w);  // Rayleigh quotient at unit v
    double nw = nrm2(w);
    if (nw == 0.0) {
      rep.value = 0.0;
      rep.converged = true;
      return rep;
    }
    for (auto& x : w) x /= nw;
    v = std::move(w);
    double rel = std::abs(est - prev) / std::max(std::abs(est), 1e-300);
    prev = est;
    hits = (it >= 2 && rel < cfg.tol) ? hits + 1 : 0;
    if (hits >= 2) {
      rep.converged = true;
      break;
    }
  }
  {
    Vec w = op(v);
    Vec r = w;
    axpy(-est, v, r);
    rep.residual = nrm2(r);
    if (rep.residual > 1e-4 * std::max(1.0, std::abs(est))) rep.converged = false;
  }
  rep.value = std::abs(est);
  return rep;
}

// Rank-one deflation op - (1/n)ee'. When e is an eigenvector of op with
// eigenvalue l, the shifted operator keeps every other eigenvalue and moves
// l to l - e'e/n = l - 1.
inline LinearMap deflate_constants(const LinearMap& op) {
  require(op.rows() == op.cols(), "deflate_constants: operator must be square");
  auto inner = std::make_shared<LinearMap>(op);
  std::size_t n = op.rows();
  auto shift = [n](Vec y, const Vec& x) {
    double s = 0.0;
    for (double t : x) s += t;
    s /= double(n);
    for (auto& t : y) t -= s;
    return y;
  };
  return LinearMap(
      n, n, [inner, shift](const Vec& x) { return shift((*inner)(x), x); },
      [inner, shift](const Vec& y) { return shift(inner->adjoint(y), y); });
}

// Second-largest eigenvalue of W, measured on the deflated operator
// W - (1/n)ee' whose spectrum is {0} plus the non-unit eigenvalues of W.
inline SpectralReport lambda2(const KernelDenoiser& den, PowerConfig cfg = {}) {
  return power_eig_magnitude(deflate_constants(den.W_map()), cfg);
}

// max |2l - 1| over the non-unit eigenvalues l of W, measured on the
// deflated reflection (2W - I) - (1/n)ee'.
inline SpectralReport zeta_star(const KernelDenoiser& den, PowerConfig cfg = {}) {
  return power_eig_magnitude(deflate_constants(denoiser_reflection_map(den.W_map())), cfg);
}

// Cross-validation route: deflate the symmetric similarity D^{1/2}WD^{-1/2}
// against its known unit eigenvector D^{1/2}e, then take the spectral norm.
// Agrees with the nonsymmetric deflation when the spectrum of W lies in
// [0, 1].
inline SpectralReport lambda2_symmetric(const KernelDenoiser& den, PowerConfig cfg = {},
                                        bool reflect = false) {
  std::size_t n = den.n();
  DiagonalWeights D = den.D();
  LinearMap base = reflect ? denoiser_reflection_map(den.W_map()) : den.W_map();
  LinearMap sym = conjugate_by_sqrt(base, D);
  Vec q1 = D.apply_sqrt(ones(n));
  double nq = nrm2(q1);
  for (auto& x : q1) x /= nq;
  auto q = std::make_shared<Vec>(std::move(q1));
  auto s = std::make_shared<LinearMap>(sym);
  auto ap = [s, q](const Vec& x) {
    Vec y = (*s)(x);
    double c = dot(*q, x);
    return axpy(-c, *q, y);
  };
  auto at = [s, q](const Vec& x) {
    Vec y = s->adjoint(x);
    double c = dot(*q, x);
    return axpy(-c, *q, y);
  };
  return power_sigma(LinearMap(n, n, ap, at), cfg);
}

// Per-denoiser spectral quantities feeding the closed-form bounds.
struct SpectralContext {
  double lambda2 = 0.0;
  double zeta_star = 0.0;
  double normD = 1.0;
  bool converged = true;
};

inline SpectralContext measure_spectral_context(const KernelDenoiser& den,
                                                PowerConfig cfg = {}) {
  SpectralContext ctx;
  SpectralReport l2 = lambda2(den, cfg);
  SpectralReport zs = zeta_star(den, cfg);
  ctx.lambda2 = l2.value;
  ctx.zeta_star = zs.value;
  ctx.normD = den.D().max();
  ctx.converged = l2.converged && zs.converged;
  return ctx;
}

enum class AlgorithmKind { ista, admm };

inline std::string algorithm_name(AlgorithmKind a) {
  return a == AlgorithmKind::ista ? "ista" : "admm";
}

// Measured contraction factor of one algorithm configuration, paired with
// the matching closed-form bound when one exists.
struct ContractionRecord {
  AlgorithmKind algorithm = AlgorithmKind::ista;
  DenoiserMode mode = DenoiserMode::plain;
  TaskKind task = TaskKind::deblur;
  double parameter = 1.0;  // step size g (ista) or penalty r (admm)
  SpectralReport power;    // run on the linear update/reflection operator
  double operator_norm = 0.0;  // ||P||-type or ||J||-type value
  double factor = 0.0;         // contraction factor: sigma, or (1+sigma)/2 for admm
  std::optional<BoundReport> operator_bound;  // bound at the operator level
  std::optional<double> factor_bound;         // bound mapped to the factor level
};

// Measures the update operator norm in the geometry that matches the
// denoiser mode: plain denoisers use the D-weighted norm and the scaled
// operators, symmetrized denoisers use the Euclidean norm. The context
// argument lets parameter sweeps reuse one lambda2/zeta_star measurement.
inline ContractionRecord measure_contraction_with_context(const KernelDenoiser& den,
                                                          const ForwardModel& fm,
                                                          AlgorithmKind algo, double parameter,
                                                          const SpectralContext& ctx,
                                                          PowerConfig cfg = {}) {
  ContractionRecord rec;
  rec.algorithm = algo;
  rec.mode = den.mode;
  rec.task = fm.kind;
  rec.parameter = parameter;

  const bool scaled = den.mode == DenoiserMode::plain;
  DiagonalWeights D = den.D();

  if (algo == AlgorithmKind::ista) {
    LinearMap P = make_update_operator(scaled ? UpdateKind::ista_scaled : UpdateKind::ista, den,
                                       fm, parameter, 1.0);
    rec.power = scaled ? power_sigma_D(P, D, cfg) : power_sigma(P, cfg);
    rec.operator_norm = rec.power.value;
    rec.factor = rec.power.value;
    if (scaled)
      rec.operator_bound = bound_ista_scaled(ctx.lambda2, parameter, fm.mu(), ctx.normD);
    else
      rec.operator_bound = bound_ista_plain(fm.kind, ctx.lambda2, parameter, fm.mu());
    rec.factor_bound = rec.operator_bound->bound;
  } else {
    LinearMap J = make_update_operator(
        scaled ? UpdateKind::admm_reflection_scaled : UpdateKind::admm_reflection, den, fm, 1.0,
        parameter);
    rec.power = scaled ? power_sigma_D(J, D, cfg) : power_sigma(J, cfg);
    rec.operator_norm = rec.power.value;
    rec.factor = 0.5 * (1.0 + rec.power.value);
    if (scaled) {
      if (fm.kind == TaskKind::inpaint)
        rec.operator_bound = bound_admm_scaled_inpaint(ctx.zeta_star, parameter,
                                                       theta_from_D(D, parameter), fm.mu(),
                                                       ctx.normD);
      else
        rec.operator_bound =
            bound_admm_scaled_smooth(fm.kind, ctx.zeta_star, parameter, fm.mu(), ctx.normD,
                                     fm.n());
    } else if (fm.kind != TaskKind::superres) {
      rec.operator_bound = bound_admm_sym(fm.kind, ctx.zeta_star, parameter, fm.mu());
    }
    if (rec.operator_bound) rec.factor_bound = 0.5 * (1.0 + rec.operator_bound->bound);
  }
  return rec;
}

inline ContractionRecord measure_contraction(const KernelDenoiser& den, const ForwardModel& fm,
                                             AlgorithmKind algo, double parameter,
                                             PowerConfig cfg = {}) {
  return measure_contraction_with_context(den, fm, algo, parameter,
                                          measure_spectral_context(den, cfg), cfg);
}

// Throws unless the measured factor is strictly contractive and dominated
// by its closed-form bound.
inline void assert_contraction(const ContractionRecord& rec, double strict_margin = 1e-9,
                               double dominance_tol = 1e-6) {
  if (!rec.power.converged)
    throw VerifyError("contraction: power iteration did not converge (value " +
                      std::to_string(rec.power.value) + ")");
  if (!(rec.factor < 1.0 - strict_margin))
    throw VerifyError("contraction: factor " + std::to_string(rec.factor) +
                      " is not strictly below 1");
  if (rec.operator_bound) {
    if (!(rec.operator_bound->bound < 1.0))
      throw VerifyError("contraction: bound " + std::to_string(rec.operator_bound->bound) +
                        " is not strictly below 1");
    if (!(rec.operator_norm <= rec.operator_bound->bound + dominance_tol))
      throw VerifyError("contraction: measured " + std::to_string(rec.operator_norm) +
                        " exceeds bound " + std::to_string(rec.operator_bound->bound) + " (" +
                        rec.operator_bound->formula_id + ")");
  }
}

inline ContractionRecord contraction_report(const KernelDenoiser& den, const ForwardModel& fm,
                                            AlgorithmKind algo, double parameter,
                                            PowerConfig cfg = {}) {
  ContractionRecord rec = measure_contraction(den, fm, algo, parameter, cfg);
  assert_contraction(rec);
  return rec;
}

}  // namespace kpnp
