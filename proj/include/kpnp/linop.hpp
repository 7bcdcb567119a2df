#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "kpnp/common.hpp"

namespace kpnp {

// Matrix-free linear map R^cols -> R^rows given by apply/adjoint closures.
// The adjoint is with respect to the Euclidean inner product; maps that are
// only self-adjoint in a weighted inner product still carry their Euclidean
// transpose here.
class LinearMap {
 public:
  using Apply = std::function<Vec(const Vec&)>;

  LinearMap() = default;
  LinearMap(std::size_t rows, std::size_t cols, Apply apply, Apply adjoint)
      : rows_(rows), cols_(cols), apply_(std::move(apply)), adjoint_(std::move(adjoint)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Vec operator()(const Vec& x) const {
    require(bool(apply_), "LinearMap: apply not set");
    require(x.size() == cols_, "LinearMap: input dimension mismatch");
    Vec y = apply_(x);
    require(y.size() == rows_, "LinearMap: apply produced wrong dimension");
    return y;
  }

  Vec adjoint(const Vec& y) const {
    require(bool(adjoint_), "LinearMap: adjoint not set");
    require(y.size() == rows_, "LinearMap: adjoint input dimension mismatch");
    Vec x = adjoint_(y);
    require(x.size() == cols_, "LinearMap: adjoint produced wrong dimension");
    return x;
  }

  LinearMap transposed() const {
    return LinearMap(cols_, rows_, adjoint_, apply_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Apply apply_;
  Apply adjoint_;
};

inline LinearMap identity_map(std::size_t n) {
  auto id = [](const Vec& x) { return x; };
  return LinearMap(n, n, id, id);
}

inline LinearMap diagonal_map(Vec d) {
  auto dd = std::make_shared<Vec>(std::move(d));
  std::size_t n = dd->size();
  auto ap = [dd](const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (*dd)[i] * x[i];
    return y;
  };
  return LinearMap(n, n, ap, ap);
}

// B after A: (B*A)x = B(A(x))
inline LinearMap compose(const LinearMap& B, const LinearMap& A) {
  require(B.cols() == A.rows(), "compose: inner dimension mismatch");
  auto a = std::make_shared<LinearMap>(A);
  auto b = std::make_shared<LinearMap>(B);
  return LinearMap(
      B.rows(), A.cols(),
      [a, b](const Vec& x) { return (*b)((*a)(x)); },
      [a, b](const Vec& y) { return a->adjoint(b->adjoint(y)); });
}

inline LinearMap add_maps(const LinearMap& A, const LinearMap& B, double alpha = 1.0,
                          double beta = 1.0) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "add_maps: shape mismatch");
  auto a = std::make_shared<LinearMap>(A);
  auto b = std::make_shared<LinearMap>(B);
  return LinearMap(
      A.rows(), A.cols(),
      [a, b, alpha, beta](const Vec& x) {
        Vec y = scaled(alpha, (*a)(x));
        return axpy(beta, (*b)(x), y);
      },
      [a, b, alpha, beta](const Vec& y) {
        Vec x = scaled(alpha, a->adjoint(y));
        return axpy(beta, b->adjoint(y), x);
      });
}

inline LinearMap scale_map(double alpha, const LinearMap& A) {
  auto a = std::make_shared<LinearMap>(A);
  return LinearMap(
      A.rows(), A.cols(),
      [a, alpha](const Vec& x) { return scaled(alpha, (*a)(x)); },
      [a, alpha](const Vec& y) { return scaled(alpha, a->adjoint(y)); });
}

// Diagonal weight matrix D with positive entries, defining <x,y>_D = x' D y.
struct DiagonalWeights {
  Vec d;

  explicit DiagonalWeights(Vec diag) : d(std::move(diag)) {
    for (double v : d) require(v > 0.0, "DiagonalWeights: entries must be positive");
  }
  static DiagonalWeights identity(std::size_t n) { return DiagonalWeights(Vec(n, 1.0)); }

  std::size_t size() const { return d.size(); }
  double max() const {
    double m = 0.0;
    for (double v : d) m = std::max(m, v);
    return m;
  }
  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : d) m = std::min(m, v);
    return m;
  }
  Vec apply(const Vec& x) const {
    require(x.size() == d.size(), "DiagonalWeights: dimension mismatch");
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = d[i] * x[i];
    return y;
  }
  Vec apply_inv(const Vec& x) const {
    require(x.size() == d.size(), "DiagonalWeights: dimension mismatch");
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / d[i];
    return y;
  }
  Vec apply_sqrt(const Vec& x) const {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sqrt(d[i]) * x[i];
    return y;
  }
  Vec apply_inv_sqrt(const Vec& x) const {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / std::sqrt(d[i]);
    return y;
  }
};

inline double d_inner(const Vec& x, const Vec& y, const DiagonalWeights& D) {
  require(x.size() == y.size() && x.size() == D.size(), "d_inner: dimension mismatch");
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double t = x[i] * D.d[i] * y[i];
    double u = s + t;
    if (std::abs(s) >= std::abs(t))
      c += (s - u) + t;
    else
      c += (t - u) + s;
    s = u;
  }
  return s + c;
}

inline double d_norm(const Vec& x, const DiagonalWeights& D) {
  return std::sqrt(d_inner(x, x, D));
}

// Similarity transform D^{1/2} M D^{-1/2}; its spectral norm equals the
// D-operator norm of M.
inline LinearMap conjugate_by_sqrt(const LinearMap& M, const DiagonalWeights& D) {
  require(M.rows() == D.size() && M.cols() == D.size(), "conjugate_by_sqrt: shape mismatch");
  auto m = std::make_shared<LinearMap>(M);
  auto dw = std::make_shared<DiagonalWeights>(D);
  return LinearMap(
      M.rows(), M.cols(),
      [m, dw](const Vec& x) { return dw->apply_sqrt((*m)(dw->apply_inv_sqrt(x))); },
      [m, dw](const Vec& y) { return dw->apply_inv_sqrt(m->adjoint(dw->apply_sqrt(y))); });
}

// Max relative defect of <Ax, y> == <x, A'y> over a few random probes.
inline double adjoint_defect(const LinearMap& A, Rng& rng, int trials = 5) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec x = rng.normal_vec(A.cols());
    Vec y = rng.normal_vec(A.rows());
    double lhs = dot(A(x), y);
    double rhs = dot(x, A.adjoint(y));
    double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace kpnp
