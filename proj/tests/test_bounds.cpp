#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kpnp/bounds.hpp"
#include "kpnp/dense.hpp"
#include "kpnp/denoiser.hpp"

using namespace kpnp;

TEST_CASE("spectral split bound") {
  CHECK(std::abs(spectral_split_bound(1.0, 0.9, 0.85) - 0.9715) < 1e-15);
  CHECK(spectral_split_bound(1.0, 0.0, 0.5) == 0.5);
  CHECK(spectral_split_bound(1.0, 1.0, 0.0) == 1.0);
  CHECK_THROWS_AS(spectral_split_bound(0.5, 0.9, 0.5), ConfigError);
  CHECK_THROWS_AS(spectral_split_bound(1.0, 0.9, 1.5), ConfigError);
  CHECK_THROWS_AS(spectral_split_bound(1.0, 0.9, -0.1), ConfigError);
}

TEST_CASE("scaled data step bound along constants") {
  CHECK(std::abs(data_step_constants_bound(1.0, 2.0, 3.0, 10) - 0.85) < 1e-15);
  // full observation, unit weights, unit step: constants are annihilated
  CHECK(data_step_constants_bound(1.0, 1.0, 8.0, 8) == 0.0);
  CHECK_THROWS_AS(data_step_constants_bound(0.0, 2.0, 3.0, 10), ConfigError);
  CHECK_THROWS_AS(data_step_constants_bound(2.0, 2.0, 3.0, 10), ConfigError);
  CHECK_THROWS_AS(data_step_constants_bound(1.0, 0.5, 3.0, 10), ConfigError);
}

TEST_CASE("scaled ista bound") {
  BoundReport b = bound_ista_scaled(0.9, 1.0, 0.3, 2.0);
  CHECK(std::abs(b.squared_bound - 0.9715) < 1e-15);
  CHECK(b.bound == std::sqrt(b.squared_bound));
  CHECK(b.formula_id == "ista_scaled");

  SECTION("bit-identical to the split of the constants bound") {
    double mu = 3.0 / 10.0;
    BoundReport via_mu = bound_ista_scaled(0.9, 1.0, mu, 2.0);
    double manual = spectral_split_bound(1.0, 0.9, data_step_constants_bound(1.0, 2.0, 3.0, 10));
    CHECK(via_mu.squared_bound == manual);
  }

  SECTION("domain checks") {
    CHECK_THROWS_AS(bound_ista_scaled(1.0, 1.0, 0.3, 2.0), ConfigError);
    CHECK_THROWS_AS(bound_ista_scaled(0.9, 1.0, 0.0, 2.0), ConfigError);
    CHECK_THROWS_AS(bound_ista_scaled(0.9, 1.0, 1.1, 2.0), ConfigError);
    CHECK_THROWS_AS(bound_ista_scaled(0.9, 1.0, 0.3, 0.9), ConfigError);
  }
}

TEST_CASE("symmetric ista bounds") {
  BoundReport deblur = bound_ista_plain(TaskKind::deblur, 0.8, 0.5, 1.0);
  CHECK(std::abs(deblur.squared_bound - 0.73) < 1e-15);
  CHECK(deblur.formula_id == "ista_sym_deblur");

  BoundReport inpaint = bound_ista_plain(TaskKind::inpaint, 0.8, 1.0, 0.5);
  CHECK(std::abs(inpaint.squared_bound - 0.82) < 1e-15);
  CHECK(inpaint.formula_id == "ista_sym_inpaint");

  BoundReport sr = bound_ista_plain(TaskKind::superres, 0.8, 1.0, 0.5);
  CHECK(sr.squared_bound == inpaint.squared_bound);
  CHECK(sr.formula_id == "ista_sym_superres");

  // unit step with full sampling contracts to lambda2 itself
  BoundReport tightest = bound_ista_plain(TaskKind::inpaint, 0.8, 1.0, 1.0);
  CHECK(std::abs(tightest.bound - 0.8) < 1e-15);
}

TEST_CASE("symmetric admm bounds") {
  BoundReport inpaint = bound_admm_sym(TaskKind::inpaint, 0.5, 1.0, 0.3);
  CHECK(std::abs(inpaint.squared_bound - 0.775) < 1e-15);
  CHECK(inpaint.formula_id == "admm_sym_inpaint");

  BoundReport db1 = bound_admm_sym(TaskKind::deblur, 0.5, 1.0, 1.0);
  CHECK(std::abs(db1.squared_bound - 0.25) < 1e-15);  // factor is zero at rho = 1
  CHECK(db1.formula_id == "admm_sym_deblur");

  BoundReport db3 = bound_admm_sym(TaskKind::deblur, 0.5, 3.0, 1.0);
  CHECK(std::abs(db3.squared_bound - 0.4375) < 1e-15);

  CHECK_THROWS_AS(bound_admm_sym(TaskKind::superres, 0.5, 1.0, 0.25), ConfigError);
}

TEST_CASE("reflection coefficient from the weights") {
  DiagonalWeights D(Vec{1.0, 2.0});
  CHECK(std::abs(theta_from_D(D, 1.0) - 1.0 / 3.0) < 1e-15);

  SECTION("the maximum is signed, not absolute") {
    DiagonalWeights one(Vec{1.0});
    CHECK(std::abs(theta_from_D(one, 10.0) - (-9.0 / 11.0)) < 1e-15);
    // signed max picks -2/3 over -9/11; an absolute max would give 9/11
    CHECK(std::abs(theta_from_D(D, 10.0) - (-2.0 / 3.0)) < 1e-15);
  }

  SECTION("unit weights reduce to the scalar reflection") {
    DiagonalWeights I = DiagonalWeights::identity(3);
    for (double rho : {0.5, 1.0, 2.0})
      CHECK(std::abs(theta_from_D(I, rho) - (1.0 - rho) / (1.0 + rho)) < 1e-15);
  }
}

TEST_CASE("scaled admm inpainting bound") {
  BoundReport b = bound_admm_scaled_inpaint(0.5, 1.0, 1.0 / 3.0, 0.3, 2.0);
  CHECK(std::abs(b.squared_bound - 0.9) < 1e-15);
  CHECK(b.formula_id == "admm_scaled_inpaint");
  CHECK_THROWS_AS(bound_admm_scaled_inpaint(0.5, 1.0, 1.0, 0.3, 2.0), ConfigError);

  SECTION("unit weights recover the symmetric inpainting factor") {
    // 1 - theta^2 with theta = (1-r)/(1+r) equals 4r/(1+r)^2
    double rho = 0.7, mu = 0.4, zs = 0.6;
    double theta = (1.0 - rho) / (1.0 + rho);
    BoundReport scaled = bound_admm_scaled_inpaint(zs, rho, theta, mu, 1.0);
    BoundReport sym = bound_admm_sym(TaskKind::inpaint, zs, rho, mu);
    CHECK(std::abs(scaled.squared_bound - sym.squared_bound) < 1e-15);
  }
}

TEST_CASE("scaled admm smoothing bounds") {
  BoundReport deblur = bound_admm_scaled_smooth(TaskKind::deblur, 0.5, 1.0, 1.0, 2.0, 16);
  CHECK(std::abs(deblur.squared_bound - 0.98828125) < 1e-15);
  CHECK(deblur.formula_id == "admm_scaled_deblur");

  BoundReport sr = bound_admm_scaled_smooth(TaskKind::superres, 0.5, 1.0, 0.25, 2.0, 16);
  CHECK(std::abs(sr.squared_bound - 0.9970703125) < 1e-15);
  CHECK(sr.formula_id == "admm_scaled_superres");

  CHECK_THROWS_AS(bound_admm_scaled_smooth(TaskKind::inpaint, 0.5, 1.0, 0.3, 2.0, 16),
                  ConfigError);

  SECTION("weaker than the symmetric deblurring bound even at unit weights") {
    double zs = 0.5, rho = 1.3;
    BoundReport scaled = bound_admm_scaled_smooth(TaskKind::deblur, zs, rho, 1.0, 1.0, 16);
    BoundReport sym = bound_admm_sym(TaskKind::deblur, zs, rho, 1.0);
    CHECK(scaled.squared_bound > sym.squared_bound);
  }
}

TEST_CASE("reflection of constants has a closed form") {
  SECTION("inpainting") {
    std::vector<std::uint8_t> mask = {1, 1, 0, 0};
    ForwardModel fm = make_inpainting(4, 1, mask);
    Vec v = fe_closed_form(fm, 1.0);
    CHECK(v == Vec{0.0, 0.0, 1.0, 1.0});
    Vec checked = fe_checked(fm, 1.0);
    CHECK(checked == v);
  }

  SECTION("deblurring") {
    ForwardModel fm = make_deblurring(6, 4, BlurKernel::gaussian(3, 1.0));
    Vec v3 = fe_closed_form(fm, 3.0);
    for (double x : v3) CHECK(x == -0.5);
    Vec v1 = fe_checked(fm, 1.0);
    for (double x : v1) CHECK(x == 0.0);
    fe_checked(fm, 3.0);  // must not throw
  }

  SECTION("no closed form for subsampled deblurring") {
    ForwardModel fm = make_superres(4, 4, BlurKernel::uniform(3), 2);
    CHECK_THROWS_AS(fe_closed_form(fm, 1.0), ConfigError);
  }
}

TEST_CASE("non-contractive counterexample") {
  CHECK(counterexample_closed_form(2) == 1.0);
  CHECK(std::abs(counterexample_closed_form(3) - std::sqrt(10.0) / 3.0) < 1e-15);
  CHECK(std::abs(counterexample_closed_form(10) - std::sqrt(164.0) / 10.0) < 1e-15);

  SECTION("dense norm matches the closed form and exceeds one") {
    CHECK(std::abs(counterexample_norm(2) - 1.0) < 1e-12);
    for (std::size_t n = 3; n <= 64; ++n) {
      double v = counterexample_norm(n);  // throws on closed-form mismatch
      CHECK(v > 1.0);
    }
  }
}

TEST_CASE("scaled reflection dissipates energy on observed coordinates") {
  Image g(4, 3);
  Rng grng(55);
  for (double& v : g.data) v = grng.uniform();
  KernelParams p;
  p.patch_radius = 1;
  p.window_radius = 2;
  p.bandwidth = 0.5;
  KernelDenoiser den = build_kernel_denoiser(g, p);
  DiagonalWeights D = den.D();
  ForwardModel fm = make_random_inpainting(4, 3, 0.5, 8);

  for (double rho : {0.5, 1.0}) {
    LinearMap Fs = prox_reflection_scaled_map(fm.A, D, rho);
    double theta = theta_from_D(D, rho);
    Rng rng(9);
    for (int t = 0; t < 5; ++t) {
      Vec x = rng.normal_vec(fm.n());
      Vec fx = Fs(x);
      double lhs = d_inner(fx, fx, D);
      double observed_energy = 0.0;
      for (std::size_t i = 0; i < fm.n(); ++i)
        if (fm.mask[i]) observed_energy += D.d[i] * x[i] * x[i];
      double rhs = d_inner(x, x, D) - (1.0 - theta * theta) * observed_energy;
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}
