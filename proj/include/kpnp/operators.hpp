#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "kpnp/cg.hpp"
#include "kpnp/denoiser.hpp"
#include "kpnp/forward.hpp"
#include "kpnp/linop.hpp"

namespace kpnp {

// Linear update operators of the fixed-point iterations. "scaled" variants
// precondition the data term by D^{-1}, the denoiser's normalization.
enum class UpdateKind {
  data_step,               // I - g A'A
  data_step_scaled,        // I - g D^{-1}A'A
  ista,                    // W (I - g A'A)
  ista_scaled,             // W (I - g D^{-1}A'A)
  denoiser_reflection,     // 2W - I
  prox_reflection,         // 2(I + r A'A)^{-1} - I
  prox_reflection_scaled,  // 2(I + r D^{-1}A'A)^{-1} - I
  admm_reflection,         // prox_reflection o denoiser_reflection
  admm_reflection_scaled,
  admm_averaged,           // (I + admm_reflection) / 2
  admm_averaged_scaled,
};

inline std::string update_kind_name(UpdateKind k) {
  switch (k) {
    case UpdateKind::data_step: return "data_step";
    case UpdateKind::data_step_scaled: return "data_step_scaled";
    case UpdateKind::ista: return "ista";
    case UpdateKind::ista_scaled: return "ista_scaled";
    case UpdateKind::denoiser_reflection: return "denoiser_reflection";
    case UpdateKind::prox_reflection: return "prox_reflection";
    case UpdateKind::prox_reflection_scaled: return "prox_reflection_scaled";
    case UpdateKind::admm_reflection: return "admm_reflection";
    case UpdateKind::admm_reflection_scaled: return "admm_reflection_scaled";
    case UpdateKind::admm_averaged: return "admm_averaged";
    case UpdateKind::admm_averaged_scaled: return "admm_averaged_scaled";
  }
  throw ConfigError("update_kind_name: invalid kind");
}

inline LinearMap data_step_map(const LinearMap& A, double gamma) {
  std::size_t n = A.cols();
  auto AtA = compose(A.transposed(), A);
  return add_maps(identity_map(n), AtA, 1.0, -gamma);
}

inline LinearMap data_step_scaled_map(const LinearMap& A, const DiagonalWeights& D,
                                      double gamma) {
  std::size_t n = A.cols();
  Vec dinv(n);
  for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / D.d[i];
  auto AtA = compose(A.transposed(), A);
  return add_maps(identity_map(n), compose(diagonal_map(dinv), AtA), 1.0, -gamma);
}

inline LinearMap denoiser_reflection_map(const LinearMap& W) {
  return add_maps(scale_map(2.0, W), identity_map(W.cols()), 1.0, -1.0);
}

namespace detail {

// Shared warm-start slot for the CG embedded in reflection applies; the
// mutex keeps concurrent applies of a copied map safe.
struct WarmSlot {
  std::mutex mu;
  Vec fwd, adj;
};

}  // namespace detail

// 2(I + r A'A)^{-1} - I, applied through CG on the SPD system I + r A'A.
// Symmetric, so the adjoint equals the apply.
inline LinearMap prox_reflection_map(const LinearMap& A, double rho, CgOptions cg = {1e-12, 500}) {
  require(rho > 0.0, "prox_reflection_map: rho must be positive");
  std::size_t n = A.cols();
  auto AtA = std::make_shared<LinearMap>(compose(A.transposed(), A));
  auto sys = std::make_shared<LinearMap>(add_maps(identity_map(n), *AtA, 1.0, rho));
  auto slot = std::make_shared<detail::WarmSlot>();
  auto ap = [sys, slot, cg](const Vec& x) {
    std::lock_guard<std::mutex> lk(slot->mu);
    cg_solve(*sys, x, slot->fwd, cg);
    Vec y = scaled(2.0, slot->fwd);
    return axpy(-1.0, x, y);
  };
  return LinearMap(n, n, ap, ap);
}

// 2(I + r D^{-1}A'A)^{-1} - I. The resolvent is computed from the SPD system
// (D + r A'A) z = D x; the Euclidean transpose uses the same system through
// the identity (I + r A'A D^{-1})^{-1} = D (D + r A'A)^{-1}.
inline LinearMap prox_reflection_scaled_map(const LinearMap& A, const DiagonalWeights& D,
                                            double rho, CgOptions cg = {1e-12, 500}) {
  require(rho > 0.0, "prox_reflection_scaled_map: rho must be positive");
  std::size_t n = A.cols();
  require(D.size() == n, "prox_reflection_scaled_map: D dimension mismatch");
  auto AtA = compose(A.transposed(), A);
  auto sys = std::make_shared<LinearMap>(add_maps(diagonal_map(D.d), AtA, 1.0, rho));
  auto dw = std::make_shared<DiagonalWeights>(D);
  auto slot = std::make_shared<detail::WarmSlot>();
  return LinearMap(
      n, n,
      [sys, dw, slot, cg](const Vec& x) {
        std::lock_guard<std::mutex> lk(slot->mu);
        cg_solve(*sys, dw->apply(x), slot->fwd, cg);
        Vec y = scaled(2.0, slot->fwd);
        return axpy(-1.0, x, y);
      },
      [sys, dw, slot, cg](const Vec& x) {
        std::lock_guard<std::mutex> lk(slot->mu);
        cg_solve(*sys, x, slot->adj, cg);
        Vec y = scaled(2.0, dw->apply(slot->adj));
        return axpy(-1.0, x, y);
      });
}

inline LinearMap make_update_operator(UpdateKind kind, const LinearMap& W,
                                      const DiagonalWeights& D, const LinearMap& A,
                                      double gamma, double rho, CgOptions cg = {1e-12, 500}) {
  std::size_t n = W.cols();
  switch (kind) {
    case UpdateKind::data_step:
      return data_step_map(A, gamma);
    case UpdateKind::data_step_scaled:
      return data_step_scaled_map(A, D, gamma);
    case UpdateKind::ista:
      return compose(W, data_step_map(A, gamma));
    case UpdateKind::ista_scaled:
      return compose(W, data_step_scaled_map(A, D, gamma));
    case UpdateKind::denoiser_reflection:
      return denoiser_reflection_map(W);
    case UpdateKind::prox_reflection:
      return prox_reflection_map(A, rho, cg);
    case UpdateKind::prox_reflection_scaled:
      return prox_reflection_scaled_map(A, D, rho, cg);
    case UpdateKind::admm_reflection:
      return compose(prox_reflection_map(A, rho, cg), denoiser_reflection_map(W));
    case UpdateKind::admm_reflection_scaled:
      return compose(prox_reflection_scaled_map(A, D, rho, cg), denoiser_reflection_map(W));
    case UpdateKind::admm_averaged:
      return add_maps(identity_map(n),
                      compose(prox_reflection_map(A, rho, cg), denoiser_reflection_map(W)), 0.5,
                      0.5);
    case UpdateKind::admm_averaged_scaled:
      return add_maps(
          identity_map(n),
          compose(prox_reflection_scaled_map(A, D, rho, cg), denoiser_reflection_map(W)), 0.5,
          0.5);
  }
  throw ConfigError("make_update_operator: invalid kind");
}

inline LinearMap make_update_operator(UpdateKind kind, const KernelDenoiser& den,
                                      const ForwardModel& fm, double gamma, double rho,
                                      CgOptions cg = {1e-12, 500}) {
  return make_update_operator(kind, den.W_map(), den.D(), fm.A, gamma, rho, cg);
}

}  // namespace kpnp
