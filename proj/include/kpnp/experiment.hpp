#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kpnp/bounds.hpp"
#include "kpnp/config.hpp"
#include "kpnp/dense.hpp"
#include "kpnp/pgm.hpp"
#include "kpnp/solver.hpp"
#include "kpnp/spectral.hpp"

namespace kpnp {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One fully materialized experiment: clean image, degraded data, guide,
// frozen denoiser.
struct Instance {
  Image original;
  ForwardModel model;
  Vec b;
  Image guide;
  KernelDenoiser den;
};

inline BlurKernel blur_from_config(const ForwardConfig& f) {
  if (f.blur_kind == "gaussian") return BlurKernel::gaussian(f.blur_size, f.blur_sigma);
  if (f.blur_kind == "uniform") return BlurKernel::uniform(f.blur_size);
  if (f.blur_kind == "none") return BlurKernel::delta();
  if (f.blur_kind == "file") {
    if (f.blur_file.empty()) throw ConfigError("config: blur_kind 'file' needs blur_file");
    return BlurKernel::from_file(f.blur_file);
  }
  throw ConfigError("config: unknown blur_kind '" + f.blur_kind + "'");
}

inline ForwardModel model_from_config(const ExperimentConfig& cfg, int w, int h) {
  switch (cfg.task) {
    case TaskKind::inpaint:
      return make_random_inpainting(w, h, cfg.forward.mu, cfg.mask_seed());
    case TaskKind::deblur:
      return make_deblurring(w, h, blur_from_config(cfg.forward));
    case TaskKind::superres:
      return make_superres(w, h, blur_from_config(cfg.forward), cfg.forward.stride);
  }
  throw ConfigError("config: invalid task");
}

// cap_to_desk_scale crops larger inputs to their top-left 64x64 corner so
// that sweeps stay within dense-oracle reach.
inline Image load_clean_image(const ExperimentConfig& cfg, bool cap_to_desk_scale) {
  Image img = cfg.image_path.empty() ? synthetic_image(cfg.width, cfg.height)
                                     : read_pgm(cfg.image_path);
  const int cap = 64;
  if (cap_to_desk_scale && (img.width > cap || img.height > cap)) {
    Image cropped(std::min(img.width, cap), std::min(img.height, cap));
    for (int y = 0; y < cropped.height; ++y)
      for (int x = 0; x < cropped.width; ++x) cropped.at(x, y) = img.at(x, y);
    img = std::move(cropped);
  }
  return img;
}

inline Instance build_instance(const ExperimentConfig& cfg, bool cap_to_desk_scale) {
  Instance inst;
  inst.original = load_clean_image(cfg, cap_to_desk_scale);
  inst.model = model_from_config(cfg, inst.original.width, inst.original.height);
  inst.model.check_consistency();
  Rng noise(cfg.noise_seed());
  inst.b = degrade(inst.model, inst.original.data, cfg.noise_sigma, noise);
  inst.guide = make_guide(inst.model, inst.b);
  inst.den = build_kernel_denoiser(inst.guide, cfg.kernel);
  if (cfg.mode == DenoiserMode::symmetrized) inst.den = symmetrize(inst.den);
  return inst;
}

inline Image observation_image(const ForwardModel& fm, const Vec& b) {
  Image img(fm.out_width, fm.out_height);
  img.data = b;
  return img;
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace detail

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << "k,residual,psnr,cumulative_cg_iters\n";
  for (const auto& p : traj.points)
    out << p.k << "," << fmt_g17(p.residual) << "," << fmt_g17(p.psnr) << ","
        << p.cum_cg_iters << "\n";
  if (!out) throw IoError("write failed for " + path);
}

struct RunReport {
  int iterations = 0;
  bool converged = false;
  std::string termination;
  double psnr_guide = 0.0;
  double psnr_final = 0.0;
  double measured_factor = std::numeric_limits<double>::quiet_NaN();
  double factor_bound = std::numeric_limits<double>::quiet_NaN();
  std::string formula_id;
  long total_cg_iters = 0;
  double wall_seconds = 0.0;
};

inline json report_to_json(const ExperimentConfig& cfg, const RunReport& rep) {
  json j;
  j["task"] = task_name(cfg.task);
  j["algorithm"] = pnp_algorithm_name(cfg.solver.algorithm);
  j["denoiser_mode"] = cfg.mode == DenoiserMode::plain ? "plain" : "symmetrized";
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  j["termination"] = rep.termination;
  j["psnr_guide"] = rep.psnr_guide;
  j["psnr_final"] = rep.psnr_final;
  j["measured_factor"] = rep.measured_factor;
  j["factor_bound"] = rep.factor_bound;
  j["bound_formula"] = rep.formula_id;
  j["total_cg_iters"] = rep.total_cg_iters;
  j["wall_seconds"] = rep.wall_seconds;
  return j;
}

// Degrade, reconstruct, and write images plus the trajectory table. The
// contraction factor is measured when the instance is small enough for the
// power method to be cheap.
inline RunReport run_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  detail::ensure_dir(out_dir);
  Instance inst = build_instance(cfg, /*cap_to_desk_scale=*/false);

  Trajectory traj = run_solver({inst.model, inst.b}, inst.den, cfg.solver,
                               &inst.original.data);

  RunReport rep;
  rep.iterations = traj.iterations;
  rep.converged = traj.converged;
  rep.termination = traj.termination;
  rep.total_cg_iters = traj.total_cg_iters;
  rep.psnr_guide = psnr(inst.guide.data, inst.original.data);
  rep.psnr_final = psnr(traj.final_x, inst.original.data);

  const std::size_t contraction_cap = 4096;
  if (inst.model.n() <= contraction_cap) {
    bool ista = cfg.solver.algorithm == PnpAlgorithm::pnp_ista ||
                cfg.solver.algorithm == PnpAlgorithm::sc_pnp_ista;
    ContractionRecord rec = measure_contraction(
        inst.den, inst.model, ista ? AlgorithmKind::ista : AlgorithmKind::admm,
        ista ? cfg.solver.gamma : cfg.solver.rho, cfg.power_cfg());
    rep.measured_factor = rec.factor;
    if (rec.factor_bound) rep.factor_bound = *rec.factor_bound;
    if (rec.operator_bound) rep.formula_id = rec.operator_bound->formula_id;
  }

  write_pgm(out_dir + "/original.pgm", inst.original);
  write_pgm(out_dir + "/degraded.pgm", observation_image(inst.model, inst.b));
  write_pgm(out_dir + "/guide.pgm", inst.guide);
  Image outimg(inst.original.width, inst.original.height);
  outimg.data = clamp01(traj.final_x);
  write_pgm(out_dir + "/output.pgm", outimg);
  write_trajectory_csv(out_dir + "/trajectory.csv", traj);

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    auto out = detail::open_out(out_dir + "/report.json");
    out << report_to_json(cfg, rep).dump(2) << "\n";
  }
  return rep;
}

struct SweepRow {
  std::string parameter_name;
  double parameter_value = 0.0;
  ContractionRecord rec;
  SpectralContext ctx;
  double actual_mu = 0.0;
  double h = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
  int width = 0;
  int height = 0;
};

inline const char* sweep_csv_header() {
  return "parameter_name,parameter_value,measured,bound,converged,iterations,"
         "operator_norm,operator_bound,lambda2,zeta_star,normD,task,algorithm,mode,mu,"
         "gamma,rho,h,patch_radius,window_radius,window,width,height,mask_seed,power_seed,"
         "noise_sigma,seed";
}

inline std::string sweep_row_csv(const ExperimentConfig& cfg, const SweepRow& r) {
  double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream os;
  os << r.parameter_name << "," << fmt_g17(r.parameter_value) << "," << fmt_g17(r.rec.factor)
     << "," << fmt_g17(r.rec.factor_bound ? *r.rec.factor_bound : nan) << ","
     << (r.rec.power.converged ? 1 : 0) << "," << r.rec.power.iterations << ","
     << fmt_g17(r.rec.operator_norm) << ","
     << fmt_g17(r.rec.operator_bound ? r.rec.operator_bound->bound : nan) << ","
     << fmt_g17(r.ctx.lambda2) << "," << fmt_g17(r.ctx.zeta_star) << ","
     << fmt_g17(r.ctx.normD) << "," << task_name(r.rec.task) << ","
     << algorithm_name(r.rec.algorithm) << ","
     << (r.rec.mode == DenoiserMode::plain ? "plain" : "symmetrized") << ","
     << fmt_g17(r.actual_mu) << "," << fmt_g17(r.gamma) << "," << fmt_g17(r.rho) << ","
     << fmt_g17(r.h) << "," << cfg.kernel.patch_radius << "," << cfg.kernel.window_radius
     << "," << window_name(cfg.kernel.window) << "," << r.width << "," << r.height << ","
     << cfg.mask_seed() << "," << cfg.power_seed() << "," << fmt_g17(cfg.noise_sigma) << ","
     << cfg.base_seed;
  return os.str();
}

inline SweepRow sweep_point(const ExperimentConfig& cfg, const Instance& base,
                            const std::string& axis, double value, AlgorithmKind algo) {
  SweepRow row;
  row.parameter_name = axis;
  row.parameter_value = value;
  row.h = cfg.kernel.bandwidth;
  row.gamma = cfg.solver.gamma;
  row.rho = cfg.solver.rho;
  row.width = base.original.width;
  row.height = base.original.height;

  double parameter = algo == AlgorithmKind::ista ? cfg.solver.gamma : cfg.solver.rho;
  PowerConfig pcfg = cfg.power_cfg();

  if (axis == "gamma" || axis == "rho") {
    parameter = value;
    if (axis == "gamma")
      row.gamma = value;
    else
      row.rho = value;
    row.ctx = measure_spectral_context(base.den, pcfg);
    row.rec = measure_contraction_with_context(base.den, base.model, algo, parameter, row.ctx,
                                               pcfg);
    row.actual_mu = base.model.mu();
    return row;
  }

  if (axis == "h") {
    KernelParams kp = cfg.kernel;
    kp.bandwidth = value;
    row.h = value;
    KernelDenoiser den = build_kernel_denoiser(base.guide, kp);
    if (cfg.mode == DenoiserMode::symmetrized) den = symmetrize(den);
    row.ctx = measure_spectral_context(den, pcfg);
    row.rec = measure_contraction_with_context(den, base.model, algo, parameter, row.ctx, pcfg);
    row.actual_mu = base.model.mu();
    return row;
  }

  if (axis == "mu") {
    ExperimentConfig point = cfg;
    if (cfg.task == TaskKind::inpaint) {
      point.forward.mu = value;
    } else if (cfg.task == TaskKind::superres) {
      // The requested ratio maps to the nearest integer stride; the echoed
      // mu column reports the ratio actually realized.
      int stride = std::max(1, int(std::llround(1.0 / std::sqrt(value))));
      point.forward.stride = stride;
    } else {
      throw ConfigError("sweep: mu axis needs an inpainting or subsampling task");
    }
    Instance inst;
    inst.original = base.original;
    inst.model = model_from_config(point, base.original.width, base.original.height);
    inst.model.check_consistency();
    Rng noise(point.noise_seed());
    inst.b = degrade(inst.model, inst.original.data, point.noise_sigma, noise);
    inst.guide = make_guide(inst.model, inst.b);
    inst.den = build_kernel_denoiser(inst.guide, point.kernel);
    if (point.mode == DenoiserMode::symmetrized) inst.den = symmetrize(inst.den);
    row.ctx = measure_spectral_context(inst.den, pcfg);
    row.rec = measure_contraction_with_context(inst.den, inst.model, algo, parameter, row.ctx,
                                               pcfg);
    row.actual_mu = inst.model.mu();
    return row;
  }

  throw ConfigError("sweep: unknown axis '" + axis + "'");
}

// Runs the grid, asserting contraction and bound dominance on every row
// that has a matching closed form. Rows are emitted in grid order whatever
// the thread count.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                                       unsigned threads = 1) {
  if (!cfg.sweep) throw ConfigError("sweep: config has no sweep section");
  detail::ensure_dir(out_dir);
  const SweepConfig& sw = *cfg.sweep;
  if (sw.axis == "gamma" && sw.algorithm != AlgorithmKind::ista)
    throw ConfigError("sweep: gamma axis requires the ista algorithm");
  if (sw.axis == "rho" && sw.algorithm != AlgorithmKind::admm)
    throw ConfigError("sweep: rho axis requires the admm algorithm");

  Instance base = build_instance(cfg, /*cap_to_desk_scale=*/true);
  std::vector<SweepRow> rows(sw.values.size());
  std::vector<std::string> failures(sw.values.size());
  parallel_for(sw.values.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      rows[i] = sweep_point(cfg, base, sw.axis, sw.values[i], sw.algorithm);
      try {
        if (rows[i].rec.operator_bound) assert_contraction(rows[i].rec);
      } catch (const VerifyError& err) {
        failures[i] = err.what();
      }
    }
  });

  auto out = detail::open_out(out_dir + "/sweep.csv");
  out << sweep_csv_header() << "\n";
  for (const auto& r : rows) out << sweep_row_csv(cfg, r) << "\n";
  if (!out) throw IoError("write failed for " + out_dir + "/sweep.csv");

  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!failures[i].empty())
      throw VerifyError("sweep row " + std::to_string(i) + " (" + sw.axis + " = " +
                        fmt_g17(sw.values[i]) + "): " + failures[i]);
  return rows;
}

struct CounterexampleRow {
  int n = 0;
  double dense_norm = 0.0;
  double closed_form = 0.0;
  double ratio = 0.0;
};

// Dense verification that the update step of the plain iteration fails to
// contract on the pooling counterexample for every n in [3, n_max].
inline std::vector<CounterexampleRow> run_counterexample(int n_max,
                                                         const std::string& out_dir) {
  if (n_max < 3) throw ConfigError("counterexample: n_max must be >= 3");
  detail::ensure_dir(out_dir);
  std::vector<CounterexampleRow> rows;
  for (int n = 3; n <= n_max; ++n) {
    CounterexampleRow r;
    r.n = n;
    r.dense_norm = counterexample_norm(std::size_t(n));  // throws on formula mismatch
    r.closed_form = counterexample_closed_form(std::size_t(n));
    r.ratio = r.dense_norm / r.closed_form;
    if (!(r.dense_norm > 1.0))
      throw VerifyError("counterexample: norm at n = " + std::to_string(n) +
                        " does not exceed 1");
    rows.push_back(r);
  }
  auto out = detail::open_out(out_dir + "/counterexample.csv");
  out << "n,dense_norm,closed_form,ratio\n";
  for (const auto& r : rows)
    out << r.n << "," << fmt_g17(r.dense_norm) << "," << fmt_g17(r.closed_form) << ","
        << fmt_g17(r.ratio) << "\n";
  if (!out) throw IoError("write failed for " + out_dir + "/counterexample.csv");
  return rows;
}

// One application of the frozen denoiser to a noisy image, self-guided.
inline RunReport run_denoise(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  detail::ensure_dir(out_dir);
  Image clean = load_clean_image(cfg, /*cap_to_desk_scale=*/false);
  Rng rng(cfg.noise_seed());
  Image noisy = clean;
  for (auto& v : noisy.data) v += cfg.noise_sigma * rng.normal();

  KernelDenoiser den = build_kernel_denoiser(noisy, cfg.kernel);
  if (cfg.mode == DenoiserMode::symmetrized) den = symmetrize(den);
  Vec out_data = den.apply_W(noisy.data);

  RunReport rep;
  rep.iterations = 1;
  rep.converged = true;
  rep.termination = "single_application";
  rep.psnr_guide = psnr(noisy.data, clean.data);
  rep.psnr_final = psnr(out_data, clean.data);

  write_pgm(out_dir + "/original.pgm", clean);
  write_pgm(out_dir + "/noisy.pgm", noisy);
  Image outimg(clean.width, clean.height);
  outimg.data = clamp01(out_data);
  write_pgm(out_dir + "/denoised.pgm", outimg);

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto out = detail::open_out(out_dir + "/report.json");
  out << report_to_json(cfg, rep).dump(2) << "\n";
  return rep;
}

// Invariant suite over the configured instance; prints one line per check
// and throws VerifyError on the first failure.
inline void run_verify(const ExperimentConfig& cfg, std::ostream& os = std::cout) {
  Instance inst = build_instance(cfg, /*cap_to_desk_scale=*/true);
  const std::size_t n = inst.den.n();

  inst.model.check_consistency();
  os << "ok: forward model ||Ae||^2 closed form matches operator ("
     << fmt_g17(inst.model.norm_Ae_squared_closed()) << ")\n";

  {
    Rng rng(cfg.base_seed + 11);
    double defect = adjoint_defect(inst.model.A, rng);
    if (defect > 1e-10)
      throw VerifyError("adjoint defect " + fmt_g17(defect) + " exceeds 1e-10");
    os << "ok: measurement adjoint consistent (defect " << fmt_g17(defect) << ")\n";
  }

  if (n <= 4096) {
    AssumptionReport rep = verify_kernel_matrix(inst.den);
    if (!rep.symmetric) throw VerifyError("kernel matrix is not symmetric");
    if (!rep.nonnegative) throw VerifyError("kernel matrix has negative entries");
    if (!rep.unit_diagonal) throw VerifyError("kernel diagonal is not all ones");
    if (rep.min_eigenvalue_K < -1e-8)
      throw VerifyError("kernel matrix not PSD (min eigenvalue " +
                        fmt_g17(rep.min_eigenvalue_K) + ")");
    if (!rep.irreducible) throw VerifyError("kernel support graph is disconnected");
    if (!rep.row_stochastic) throw VerifyError("We deviates from e beyond 1e-12");
    os << "ok: kernel assumptions (min eig " << fmt_g17(rep.min_eigenvalue_K) << ", lambda2 "
       << fmt_g17(rep.lambda2) << ")\n";
  }

  {
    DiagonalWeights D = inst.den.D();
    Rng rng(cfg.base_seed + 13);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      Vec x = rng.normal_vec(n), y = rng.normal_vec(n);
      double lhs = d_inner(inst.den.apply_W(x), y, D);
      double rhs = d_inner(x, inst.den.apply_W(y), D);
      worst = std::max(worst,
                       std::abs(lhs - rhs) / std::max(1.0, d_norm(x, D) * d_norm(y, D)));
    }
    if (worst > 1e-10)
      throw VerifyError("denoiser is not self-adjoint in the D inner product (defect " +
                        fmt_g17(worst) + ")");
    os << "ok: denoiser self-adjoint in the weighted inner product (defect " << fmt_g17(worst)
       << ")\n";

    SpectralReport wnorm = power_sigma_D(inst.den.W_map(), D, cfg.power_cfg());
    if (std::abs(wnorm.value - 1.0) > 1e-6)
      throw VerifyError("||W||_D = " + fmt_g17(wnorm.value) + " deviates from 1");
    os << "ok: ||W||_D = " << fmt_g17(wnorm.value) << "\n";
  }

  for (AlgorithmKind algo : {AlgorithmKind::ista, AlgorithmKind::admm}) {
    double parameter = algo == AlgorithmKind::ista ? cfg.solver.gamma : cfg.solver.rho;
    ContractionRecord rec =
        contraction_report(inst.den, inst.model, algo, parameter, cfg.power_cfg());
    os << "ok: " << algorithm_name(algo) << " contraction factor " << fmt_g17(rec.factor)
       << " <= bound " << fmt_g17(rec.factor_bound ? *rec.factor_bound : 1.0) << " ("
       << (rec.operator_bound ? rec.operator_bound->formula_id : std::string("none"))
       << ")\n";
  }

  if (inst.model.kind != TaskKind::superres) {
    fe_checked(inst.model, cfg.solver.rho);
    os << "ok: prox reflection of constants matches its closed form\n";
  }

  for (int cn = 3; cn <= 12; ++cn) counterexample_norm(std::size_t(cn));
  os << "ok: counterexample norms match the closed form for n in [3, 12]\n";

  os << "verify: all checks passed\n";
}

}  // namespace kpnp
