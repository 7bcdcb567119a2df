#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kpnp/denoiser.hpp"
#include "kpnp/dense.hpp"

using namespace kpnp;

namespace {

Image constant_row(int width, double value) {
  Image img(width, 1);
  for (double& v : img.data) v = value;
  return img;
}

Image random_guide(int w, int h, std::uint64_t seed) {
  Image img(w, h);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

// Independent dense oracle: same kernel definition, different code path
// (explicit pairwise loops, no row bookkeeping).
Eigen::MatrixXd oracle_K(const Image& g, const KernelParams& p) {
  const int w = g.width, h = g.height;
  const std::size_t n = std::size_t(w) * h;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(long(n), long(n));
  const double inv_2h2 = 1.0 / (2.0 * p.bandwidth * p.bandwidth);
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      const long pidx = long(py) * w + px;
      for (int qy = 0; qy < h; ++qy)
        for (int qx = 0; qx < w; ++qx) {
          const long qidx = long(qy) * w + qx;
          const int dx = qx - px, dy = qy - py;
          if (std::abs(dx) > p.window_radius || std::abs(dy) > p.window_radius) continue;
          if (pidx == qidx) {
            K(pidx, qidx) = 1.0;
            continue;
          }
          double dist = 0.0;
          for (int fy = -p.patch_radius; fy <= p.patch_radius; ++fy)
            for (int fx = -p.patch_radius; fx <= p.patch_radius; ++fx) {
              const double a = g.at(wrap(px + fx, w), wrap(py + fy, h));
              const double b = g.at(wrap(qx + fx, w), wrap(qy + fy, h));
              dist += (a - b) * (a - b);
            }
          double weight = std::exp(-dist * inv_2h2);
          if (p.window == WindowType::hat) {
            weight *= (1.0 - double(std::abs(dx)) / double(p.window_radius + 1)) *
                      (1.0 - double(std::abs(dy)) / double(p.window_radius + 1));
          }
          K(pidx, qidx) = weight;
        }
    }
  return K;
}

}  // namespace

TEST_CASE("constant guide interior row is the hat stencil") {
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 1;
  p.bandwidth = 0.7;
  KernelDenoiser den = build_kernel_denoiser(constant_row(5, 0.4), p);

  // Constant guide: every patch distance is zero, so K is the pure hat
  // window. Interior row of W is (1/4, 1/2, 1/4).
  Vec e2(5, 0.0);
  e2[2] = 1.0;
  Vec col = den.apply_W(e2);  // W column through the symmetric K
  Eigen::MatrixXd K = den.dense_K();
  CHECK(K(2, 1) == 0.5);
  CHECK(K(2, 2) == 1.0);
  CHECK(K(2, 3) == 0.5);
  CHECK(K(2, 0) == 0.0);
  CHECK(den.dvec[2] == 2.0);

  Vec x(5, 0.0);
  x[1] = 1.0;
  Vec wx = den.apply_W(x);
  CHECK(std::abs(wx[2] - 0.25) < 1e-15);
  x.assign(5, 0.0);
  x[2] = 1.0;
  wx = den.apply_W(x);
  CHECK(std::abs(wx[2] - 0.5) < 1e-15);

  // Edge rows truncate: pixel 0 sees only {0, 1}, so its W row is (2/3, 1/3).
  CHECK(den.dvec[0] == 1.5);
  Vec w0(5, 0.0);
  w0[0] = 1.0;
  Vec r0 = den.apply_Wt(w0);  // row 0 of W = column 0 of W^T
  CHECK(std::abs(r0[0] - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(r0[1] - 1.0 / 3.0) < 1e-15);
  CHECK(r0[2] == 0.0);
  (void)col;
}

TEST_CASE("tiny bandwidth with box window gives block constant kernel") {
  Image g(3, 1);
  g.data = {0.0, 0.0, 1.0};
  KernelParams p;
  p.patch_radius = 0;
  p.window_radius = 2;
  p.bandwidth = 1e-4;
  p.window = WindowType::box;
  KernelDenoiser den = build_kernel_denoiser(g, p);
  Eigen::MatrixXd K = den.dense_K();

  Eigen::MatrixXd expect(3, 3);
  expect << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK((K - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(den.dvec[0] == 2.0);
  CHECK(den.dvec[2] == 1.0);

  AssumptionReport rep = verify_kernel_matrix(den);
  CHECK_FALSE(rep.irreducible);  // two blocks never talk
  CHECK(rep.symmetric);
  CHECK(rep.psd);
}

TEST_CASE("kernel entries match an independent pairwise oracle") {
  Image g = random_guide(6, 6, 2024);
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 2;
  p.bandwidth = 0.45;
  KernelDenoiser den = build_kernel_denoiser(g, p, 2);
  Eigen::MatrixXd K = den.dense_K();
  Eigen::MatrixXd Ko = oracle_K(g, p);
  CHECK((K - Ko).cwiseAbs().maxCoeff() < 1e-14);

  // Symmetry must hold bit for bit: each pair is assembled from one
  // symmetric expression.
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);

  SECTION("box window oracle agrees too") {
    p.window = WindowType::box;
    KernelDenoiser db = build_kernel_denoiser(g, p);
    CHECK((db.dense_K() - oracle_K(g, p)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("patches wrap around the torus") {
  Image g(5, 1);
  g.data = {0.9, 0.1, 0.5, 0.3, 0.7};
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 1;
  p.bandwidth = 1.0;
  KernelDenoiser den = build_kernel_denoiser(g, p);

  // Patch at 0 wraps to (g4, g0, g1); patch at 1 is (g0, g1, g2). On a
  // height-1 torus the 3x3 patch revisits the single row three times.
  const double d = (0.7 - 0.9) * (0.7 - 0.9) + (0.9 - 0.1) * (0.9 - 0.1) +
                   (0.1 - 0.5) * (0.1 - 0.5);
  const double expect = 0.5 * std::exp(-3.0 * d / 2.0);
  CHECK(std::abs(den.dense_K()(0, 1) - expect) < 1e-15);
}

TEST_CASE("row normalization and duality identities") {
  Image g = random_guide(7, 5, 31);
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 2;
  p.bandwidth = 0.6;
  KernelDenoiser den = build_kernel_denoiser(g, p);
  const std::size_t n = den.n();

  SECTION("W fixes constants") {
    Vec we = den.apply_W(ones(n));
    for (double v : we) CHECK(std::abs(v - 1.0) < 1e-12);
  }

  SECTION("W is self-adjoint in the D inner product") {
    Rng rng(5);
    DiagonalWeights D = den.D();
    for (int t = 0; t < 5; ++t) {
      Vec x = rng.uniform_vec(n), y = rng.uniform_vec(n);
      double lhs = d_inner(den.apply_W(x), y, D);
      double rhs = d_inner(x, den.apply_W(y), D);
      CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }

  SECTION("transpose pairing against the Euclidean inner product") {
    Rng rng(6);
    Vec x = rng.normal_vec(n), y = rng.normal_vec(n);
    double lhs = dot(den.apply_W(x), y);
    double rhs = dot(x, den.apply_Wt(y));
    CHECK(std::abs(lhs - rhs) < 1e-11 * std::max(1.0, std::abs(lhs)));
    CHECK(adjoint_defect(den.W_map(), rng, 5) < 1e-11);
  }

  SECTION("dense_K agrees with the operator form") {
    Rng rng(7);
    Vec x = rng.uniform_vec(n);
    Vec kx = den.apply_K(x);
    Eigen::MatrixXd K = den.dense_K();
    for (std::size_t i = 0; i < n; ++i) {
      double ref = 0.0;
      for (std::size_t j = 0; j < n; ++j) ref += K(long(i), long(j)) * x[j];
      CHECK(std::abs(kx[i] - ref) < 1e-13);
    }
  }
}

TEST_CASE("sinkhorn symmetrization produces a doubly stochastic kernel") {
  Image g = random_guide(6, 6, 77);
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 2;
  p.bandwidth = 0.5;
  KernelDenoiser plain = build_kernel_denoiser(g, p);
  KernelDenoiser sym = symmetrize(plain);
  const std::size_t n = sym.n();

  CHECK(sym.mode == DenoiserMode::symmetrized);
  for (double v : sym.svec) CHECK(v > 0.0);
  for (double v : sym.dvec) CHECK(v == 1.0);

  // W_s = S K S with row sums 1 within the Sinkhorn tolerance.
  Vec we = sym.apply_W(ones(n));
  for (double v : we) CHECK(std::abs(v - 1.0) < 1e-9);

  // Symmetric operator: apply_W and apply_Wt coincide.
  Rng rng(8);
  Vec x = rng.uniform_vec(n);
  Vec a = sym.apply_W(x), b = sym.apply_Wt(x);
  for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == b[i]);

  AssumptionReport rep = verify_kernel_matrix(sym);
  CHECK(rep.symmetric);
  CHECK(rep.psd);
  CHECK(rep.irreducible);
}

TEST_CASE("assumption checks pass on a smooth random guide") {
  Image g = random_guide(8, 6, 12);
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 1;
  p.bandwidth = 0.3;
  KernelDenoiser den = build_kernel_denoiser(g, p);
  AssumptionReport rep = verify_kernel_matrix(den);
  CHECK(rep.symmetric);
  CHECK(rep.nonnegative);
  CHECK(rep.unit_diagonal);
  CHECK(rep.psd);
  CHECK(rep.irreducible);
  CHECK(rep.row_stochastic);
  CHECK(rep.ok());
  CHECK(rep.lambda2 < 1.0);
  CHECK(rep.lambda2 > 0.0);
  CHECK(rep.lambda_min_W >= -1e-12);
}

TEST_CASE("box window can break positive semidefiniteness") {
  KernelParams p;
  p.patch_radius = 0;
  p.window_radius = 1;
  p.bandwidth = 1.0;
  p.window = WindowType::box;
  KernelDenoiser den = build_kernel_denoiser(constant_row(3, 0.5), p);

  // K is the tridiagonal all-ones band; its smallest eigenvalue is 1 - sqrt(2).
  AssumptionReport rep = verify_kernel_matrix(den);
  CHECK_FALSE(rep.psd);
  CHECK(std::abs(rep.min_eigenvalue_K - (1.0 - std::sqrt(2.0))) < 1e-12);
  CHECK(rep.symmetric);
  CHECK(rep.irreducible);
  CHECK_FALSE(rep.ok());
}

TEST_CASE("tiny bandwidth with distinct guide degenerates to the identity") {
  Image g(3, 1);
  g.data = {0.0, 0.5, 1.0};
  KernelParams p;
  p.patch_radius = 0;
  p.window_radius = 1;
  p.bandwidth = 1e-4;
  KernelDenoiser den = build_kernel_denoiser(g, p);
  Eigen::MatrixXd K = den.dense_K();
  CHECK((K - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  AssumptionReport rep = verify_kernel_matrix(den);
  CHECK_FALSE(rep.irreducible);
  CHECK(rep.psd);
  CHECK(rep.row_stochastic);
  CHECK_FALSE(rep.ok());
}

TEST_CASE("kernel parameter validation") {
  KernelParams p;
  p.window_radius = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = KernelParams{};
  p.bandwidth = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = KernelParams{};
  p.patch_radius = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = KernelParams{};
  CHECK_NOTHROW(p.validate());
  p.patch_radius = 0;  // single-pixel patches are legal
  CHECK_NOTHROW(p.validate());
}
