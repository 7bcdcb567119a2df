#pragma once

#include <cstdint>
#include <queue>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kpnp/image.hpp"
#include "kpnp/linop.hpp"

namespace kpnp {

enum class WindowType { hat, box };
enum class DenoiserMode { plain, symmetrized };

struct KernelParams {
  int patch_radius = 1;   // patch is the (2*patch_radius+1)^2 guide neighborhood
  int window_radius = 2;  // weights live on the (2*window_radius+1)^2 window
  double bandwidth = 0.3;
  WindowType window = WindowType::hat;

  void validate() const {
    if (patch_radius < 0) throw ConfigError("kernel: patch_radius must be >= 0");
    if (window_radius < 1)
      throw ConfigError("kernel: window_radius must be >= 1 (weight graph must connect pixels)");
    if (!(bandwidth > 0.0)) throw ConfigError("kernel: bandwidth must be positive");
  }
};

inline const char* window_name(WindowType w) { return w == WindowType::hat ? "hat" : "box"; }

// Sparse symmetric kernel matrix K plus the derived denoiser W. In plain
// mode W = D^{-1}K with D = diag(Ke); in symmetrized mode W = SKS with a
// Sinkhorn scaling S = diag(s), which is symmetric doubly stochastic and has
// D = I.
class KernelDenoiser {
 public:
  int width = 0;
  int height = 0;
  KernelParams params;
  DenoiserMode mode = DenoiserMode::plain;
  // K rows: for pixel p, (q, K_pq) over the window; includes the diagonal.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> krows;
  Vec dvec;   // plain: Ke; symmetrized: all ones
  Vec svec;   // symmetrized only: Sinkhorn scaling factors

  std::size_t n() const { return std::size_t(width) * height; }

  Vec apply_K(const Vec& x) const {
    require(x.size() == n(), "KernelDenoiser: dimension mismatch");
    Vec y(n(), 0.0);
    for (std::size_t p = 0; p < n(); ++p) {
      double s = 0.0;
      for (auto [q, w] : krows[p]) s += w * x[q];
      y[p] = s;
    }
    return y;
  }

  Vec apply_W(const Vec& x) const {
    if (mode == DenoiserMode::plain) {
      Vec y = apply_K(x);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] /= dvec[i];
      return y;
    }
    Vec sx(n());
    for (std::size_t i = 0; i < n(); ++i) sx[i] = svec[i] * x[i];
    Vec y = apply_K(sx);
    for (std::size_t i = 0; i < n(); ++i) y[i] *= svec[i];
    return y;
  }

  // Euclidean transpose: K D^{-1} in plain mode, W itself when symmetric.
  Vec apply_Wt(const Vec& x) const {
    if (mode == DenoiserMode::symmetrized) return apply_W(x);
    Vec xi(n());
    for (std::size_t i = 0; i < n(); ++i) xi[i] = x[i] / dvec[i];
    return apply_K(xi);
  }

  LinearMap W_map() const {
    auto self = std::make_shared<KernelDenoiser>(*this);
    return LinearMap(
        n(), n(), [self](const Vec& x) { return self->apply_W(x); },
        [self](const Vec& x) { return self->apply_Wt(x); });
  }

  LinearMap K_map() const {
    auto self = std::make_shared<KernelDenoiser>(*this);
    auto ap = [self](const Vec& x) { return self->apply_K(x); };
    return LinearMap(n(), n(), ap, ap);
  }

  DiagonalWeights D() const { return DiagonalWeights(dvec); }

  Eigen::MatrixXd dense_K() const {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(long(n()), long(n()));
    for (std::size_t p = 0; p < n(); ++p)
      for (auto [q, w] : krows[p]) K(long(p), long(q)) = w;
    return K;
  }
};

namespace detail {

// Squared distance between the circular-boundary guide patches at p and q.
// Terms are accumulated in a fixed offset order and each term is symmetric
// under swapping p and q, so the value is bit-identical both ways.
inline double patch_dist_sq(const Image& g, int px, int py, int qx, int qy, int f) {
  double s = 0.0;
  for (int dy = -f; dy <= f; ++dy) {
    int ay = wrap(py + dy, g.height), by = wrap(qy + dy, g.height);
    for (int dx = -f; dx <= f; ++dx) {
      int ax = wrap(px + dx, g.width), bx = wrap(qx + dx, g.width);
      double d = g.at(ax, ay) - g.at(bx, by);
      s += d * d;
    }
  }
  return s;
}

inline double hat_weight(int dx, int dy, int r, WindowType w) {
  if (w == WindowType::box) return 1.0;
  double wx = 1.0 - double(std::abs(dx)) / double(r + 1);
  double wy = 1.0 - double(std::abs(dy)) / double(r + 1);
  return wx * wy;
}

}  // namespace detail

// Builds K entrywise as the Gaussian patch affinity times the window weight,
// with a forced unit diagonal, then forms D = diag(Ke).
inline KernelDenoiser build_kernel_denoiser(const Image& guide, const KernelParams& params,
                                            unsigned nthreads = 1) {
  params.validate();
  for (double v : guide.data) require(std::isfinite(v), "build_kernel_denoiser: guide not finite");
  KernelDenoiser den;
  den.width = guide.width;
  den.height = guide.height;
  den.params = params;
  den.mode = DenoiserMode::plain;
  den.krows.resize(den.n());

  const int r = params.window_radius;
  const int f = params.patch_radius;
  const double inv_2h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
  const int w = guide.width, h = guide.height;

  parallel_for(den.n(), nthreads, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      int px = int(p % std::size_t(w)), py = int(p / std::size_t(w));
      auto& row = den.krows[p];
      row.reserve(std::size_t(2 * r + 1) * (2 * r + 1));
      for (int dy = -r; dy <= r; ++dy) {
        int qy = py + dy;
        if (qy < 0 || qy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          int qx = px + dx;
          if (qx < 0 || qx >= w) continue;
          std::uint32_t q = std::uint32_t(qy) * std::uint32_t(w) + std::uint32_t(qx);
          double val;
          if (dx == 0 && dy == 0) {
            val = 1.0;
          } else {
            double d2 = detail::patch_dist_sq(guide, px, py, qx, qy, f);
            val = std::exp(-d2 * inv_2h2) * detail::hat_weight(dx, dy, r, params.window);
          }
          row.emplace_back(q, val);
        }
      }
    }
  });

  den.dvec.assign(den.n(), 0.0);
  for (std::size_t p = 0; p < den.n(); ++p) {
    double s = 0.0;
    for (auto [q, kv] : den.krows[p]) s += kv;
    require(s > 0.0, "build_kernel_denoiser: zero row sum");
    den.dvec[p] = s;
  }
  return den;
}

struct SinkhornOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

// Symmetric Sinkhorn scaling: fixed point of s <- sqrt(s / Ks) satisfies
// s_i (Ks)_i = 1, making diag(s) K diag(s) doubly stochastic.
inline KernelDenoiser symmetrize(const KernelDenoiser& plain, SinkhornOptions opts = {}) {
  require(plain.mode == DenoiserMode::plain, "symmetrize: input must be a plain denoiser");
  KernelDenoiser den = plain;
  std::size_t n = den.n();
  Vec s(n, 1.0);
  double defect = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    Vec ks = den.apply_K(s);
    defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) defect = std::max(defect, std::abs(s[i] * ks[i] - 1.0));
    if (defect < opts.tol) break;
    for (std::size_t i = 0; i < n; ++i) s[i] = std::sqrt(s[i] / ks[i]);
  }
  if (!(defect < opts.tol))
    throw SolveError("symmetrize: Sinkhorn scaling did not reach tol " +
                     std::to_string(opts.tol) + " (defect " + std::to_string(defect) + ")");
  den.mode = DenoiserMode::symmetrized;
  den.svec = std::move(s);
  den.dvec.assign(n, 1.0);
  return den;
}

// Dense verification of the kernel matrix assumptions plus the induced
// spectrum of W. Intended for desk-scale instances.
struct AssumptionReport {
  bool symmetric = false;
  bool nonnegative = false;
  bool unit_diagonal = false;
  bool psd = false;
  bool irreducible = false;
  bool row_stochastic = false;
  double max_asymmetry = 0.0;
  double min_entry = 0.0;
  double max_diag_defect = 0.0;
  double min_eigenvalue_K = 0.0;
  double max_We_defect = 0.0;
  double lambda2 = 0.0;      // second-largest eigenvalue of W
  double lambda_min_W = 0.0;  // smallest eigenvalue of W

  bool ok() const {
    return symmetric && nonnegative && unit_diagonal && psd && irreducible && row_stochastic;
  }
};

inline AssumptionReport verify_kernel_matrix(const KernelDenoiser& den,
                                             std::size_t dense_limit = 4096) {
  require(den.n() <= dense_limit, "verify_kernel_matrix: instance too large for dense checks");
  AssumptionReport rep;
  const std::size_t n = den.n();
  Eigen::MatrixXd K = den.dense_K();

  rep.max_asymmetry = (K - K.transpose()).cwiseAbs().maxCoeff();
  rep.symmetric = rep.max_asymmetry == 0.0;
  rep.min_entry = K.minCoeff();
  rep.nonnegative = rep.min_entry >= 0.0;
  rep.max_diag_defect = (K.diagonal().array() - 1.0).abs().maxCoeff();
  rep.unit_diagonal = rep.max_diag_defect == 0.0;

  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue_K = es.eigenvalues().minCoeff();
    rep.psd = rep.min_eigenvalue_K >= -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
  }

  // Symmetric nonnegative K with positive diagonal: irreducible iff the
  // support graph is connected.
  {
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> bfs;
    bfs.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!bfs.empty()) {
      std::size_t p = bfs.front();
      bfs.pop();
      for (auto [q, w] : den.krows[p]) {
        if (w > 0.0 && !seen[q]) {
          seen[q] = 1;
          ++count;
          bfs.push(q);
        }
      }
    }
    rep.irreducible = (count == n) && n > 0;
  }

  {
    Vec we = den.apply_W(ones(n));
    double defect = 0.0;
    for (double v : we) defect = std::max(defect, std::abs(v - 1.0));
    rep.max_We_defect = defect;
    rep.row_stochastic = defect <= 1e-12;
  }

  // Spectrum of W from the symmetric similarity D^{-1/2} K D^{-1/2}
  // (plain mode) or SKS (symmetrized mode, computed the same way with the
  // scaling absorbed): real, and contained in [0, 1] when K is PSD.
  {
    Eigen::VectorXd dhalf(static_cast<Eigen::Index>(n));
    if (den.mode == DenoiserMode::plain)
      for (std::size_t i = 0; i < n; ++i) dhalf(long(i)) = 1.0 / std::sqrt(den.dvec[i]);
    else
      for (std::size_t i = 0; i < n; ++i) dhalf(long(i)) = den.svec[i];
    Eigen::MatrixXd Wsim = dhalf.asDiagonal() * K * dhalf.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Wsim, Eigen::EigenvaluesOnly);
    auto ev = es.eigenvalues();  // ascending
    rep.lambda_min_W = ev(0);
    rep.lambda2 = n >= 2 ? ev(long(n) - 2) : ev(0);
  }
  return rep;
}

}  // namespace kpnp
