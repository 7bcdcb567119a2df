#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpnp/denoiser.hpp"
#include "kpnp/forward.hpp"
#include "kpnp/solver.hpp"
#include "kpnp/spectral.hpp"

namespace kpnp {

using nlohmann::json;

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

struct ForwardConfig {
  double mu = 0.3;  // inpainting sampling ratio
  std::optional<std::uint64_t> mask_seed;
  std::string blur_kind = "gaussian";  // gaussian | uniform | file | none
  int blur_size = 5;
  double blur_sigma = 1.6;
  std::string blur_file;
  int stride = 2;  // subsampled deblurring
};

struct SweepConfig {
  std::string axis;  // mu | gamma | rho | h
  std::vector<double> values;
  AlgorithmKind algorithm = AlgorithmKind::ista;
};

struct ExperimentConfig {
  TaskKind task = TaskKind::deblur;
  std::string image_path;  // empty: deterministic synthetic image
  int width = 32;
  int height = 32;
  ForwardConfig forward;
  double noise_sigma = 0.0;
  std::optional<std::uint64_t> noise_seed_explicit;
  KernelParams kernel;
  DenoiserMode mode = DenoiserMode::plain;
  SolverConfig solver;
  std::optional<SweepConfig> sweep;
  PowerConfig power;
  std::optional<std::uint64_t> power_seed_explicit;
  int counterexample_n_max = 64;
  std::uint64_t base_seed = 1000;
  std::string output_dir = ".";

  // Component seeds derive from the base seed unless set explicitly, so one
  // --seed flag reproduces a whole experiment.
  std::uint64_t mask_seed() const {
    return forward.mask_seed ? *forward.mask_seed : base_seed + 1;
  }
  std::uint64_t noise_seed() const {
    return noise_seed_explicit ? *noise_seed_explicit : base_seed + 2;
  }
  std::uint64_t power_seed() const {
    return power_seed_explicit ? *power_seed_explicit : base_seed + 4;
  }
  PowerConfig power_cfg() const {
    PowerConfig p = power;
    p.seed = power_seed();
    return p;
  }
};

inline TaskKind task_from_name(const std::string& s) {
  if (s == "inpaint" || s == "inpainting") return TaskKind::inpaint;
  if (s == "deblur" || s == "deblurring") return TaskKind::deblur;
  if (s == "sr" || s == "superres" || s == "superresolution") return TaskKind::superres;
  throw ConfigError("config: unknown task '" + s + "'");
}

inline ExperimentConfig parse_config(const json& j) {
  detail::check_keys(j,
                     {"task", "image", "image_size", "forward", "noise_sigma", "noise_seed",
                      "kernel", "denoiser_mode", "solver", "sweep", "power", "counterexample",
                      "seed", "output_dir"},
                     "top level");
  ExperimentConfig cfg;
  if (j.contains("task")) cfg.task = task_from_name(j.at("task").get<std::string>());
  cfg.image_path = detail::get_or<std::string>(j, "image", "");
  if (j.contains("image_size")) {
    auto sz = j.at("image_size");
    if (!sz.is_array() || sz.size() != 2)
      throw ConfigError("config: image_size must be [width, height]");
    cfg.width = sz.at(0).get<int>();
    cfg.height = sz.at(1).get<int>();
    if (cfg.width < 2 || cfg.height < 2)
      throw ConfigError("config: image_size entries must be >= 2");
  }
  if (j.contains("forward")) {
    const json& f = j.at("forward");
    detail::check_keys(
        f, {"mu", "mask_seed", "blur_kind", "blur_size", "blur_sigma", "blur_file", "stride"},
        "forward");
    cfg.forward.mu = detail::get_or<double>(f, "mu", cfg.forward.mu);
    cfg.forward.mask_seed = detail::get_opt<std::uint64_t>(f, "mask_seed");
    cfg.forward.blur_kind = detail::get_or<std::string>(f, "blur_kind", cfg.forward.blur_kind);
    cfg.forward.blur_size = detail::get_or<int>(f, "blur_size", cfg.forward.blur_size);
    cfg.forward.blur_sigma = detail::get_or<double>(f, "blur_sigma", cfg.forward.blur_sigma);
    cfg.forward.blur_file = detail::get_or<std::string>(f, "blur_file", "");
    cfg.forward.stride = detail::get_or<int>(f, "stride", cfg.forward.stride);
  }
  cfg.noise_sigma = detail::get_or<double>(j, "noise_sigma", 0.0);
  if (cfg.noise_sigma < 0.0) throw ConfigError("config: noise_sigma must be >= 0");
  cfg.noise_seed_explicit = detail::get_opt<std::uint64_t>(j, "noise_seed");
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    detail::check_keys(k, {"patch_radius", "window_radius", "h", "window"}, "kernel");
    cfg.kernel.patch_radius = detail::get_or<int>(k, "patch_radius", cfg.kernel.patch_radius);
    cfg.kernel.window_radius =
        detail::get_or<int>(k, "window_radius", cfg.kernel.window_radius);
    cfg.kernel.bandwidth = detail::get_or<double>(k, "h", cfg.kernel.bandwidth);
    std::string w = detail::get_or<std::string>(k, "window", "hat");
    if (w == "hat")
      cfg.kernel.window = WindowType::hat;
    else if (w == "box")
      cfg.kernel.window = WindowType::box;
    else
      throw ConfigError("config: kernel window must be 'hat' or 'box'");
    cfg.kernel.validate();
  }
  {
    std::string m = detail::get_or<std::string>(j, "denoiser_mode", "plain");
    if (m == "plain")
      cfg.mode = DenoiserMode::plain;
    else if (m == "symmetrized")
      cfg.mode = DenoiserMode::symmetrized;
    else
      throw ConfigError("config: denoiser_mode must be 'plain' or 'symmetrized'");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::check_keys(s,
                       {"algorithm", "gamma", "rho", "max_iters", "stop_tol", "cg_tol",
                        "cg_max_iters", "init", "init_seed"},
                       "solver");
    cfg.solver.algorithm = pnp_algorithm_from_name(
        detail::get_or<std::string>(s, "algorithm", "sc_pnp_ista"));
    cfg.solver.gamma = detail::get_or<double>(s, "gamma", cfg.solver.gamma);
    cfg.solver.rho = detail::get_or<double>(s, "rho", cfg.solver.rho);
    cfg.solver.max_iters = detail::get_or<int>(s, "max_iters", cfg.solver.max_iters);
    cfg.solver.stop_tol = detail::get_or<double>(s, "stop_tol", cfg.solver.stop_tol);
    cfg.solver.cg.tol = detail::get_or<double>(s, "cg_tol", cfg.solver.cg.tol);
    cfg.solver.cg.max_iter = detail::get_or<int>(s, "cg_max_iters", cfg.solver.cg.max_iter);
    cfg.solver.init = init_rule_from_name(detail::get_or<std::string>(s, "init", "guide"));
    if (cfg.solver.init == InitRule::image)
      throw ConfigError("config: init 'image' is only available programmatically");
    if (s.contains("init_seed"))
      cfg.solver.init_seed = s.at("init_seed").get<std::uint64_t>();
    cfg.solver.validate();
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    detail::check_keys(s, {"axis", "values", "algorithm"}, "sweep");
    SweepConfig sw;
    sw.axis = detail::get_or<std::string>(s, "axis", "");
    if (sw.axis != "mu" && sw.axis != "gamma" && sw.axis != "rho" && sw.axis != "h")
      throw ConfigError("config: sweep axis must be one of mu, gamma, rho, h");
    sw.values = detail::get_or<std::vector<double>>(s, "values", {});
    if (sw.values.empty()) throw ConfigError("config: sweep values must be nonempty");
    std::string a = detail::get_or<std::string>(s, "algorithm", "ista");
    if (a == "ista")
      sw.algorithm = AlgorithmKind::ista;
    else if (a == "admm")
      sw.algorithm = AlgorithmKind::admm;
    else
      throw ConfigError("config: sweep algorithm must be 'ista' or 'admm'");
    cfg.sweep = sw;
  }
  if (j.contains("power")) {
    const json& p = j.at("power");
    detail::check_keys(p, {"tol", "max_iters", "seed"}, "power");
    cfg.power.tol = detail::get_or<double>(p, "tol", cfg.power.tol);
    if (!(cfg.power.tol > 0.0)) throw ConfigError("config: power tol must be positive");
    cfg.power.max_iter = detail::get_or<int>(p, "max_iters", cfg.power.max_iter);
    cfg.power_seed_explicit = detail::get_opt<std::uint64_t>(p, "seed");
  }
  if (j.contains("counterexample")) {
    const json& c = j.at("counterexample");
    detail::check_keys(c, {"n_max"}, "counterexample");
    cfg.counterexample_n_max = detail::get_or<int>(c, "n_max", 64);
    if (cfg.counterexample_n_max < 3)
      throw ConfigError("config: counterexample n_max must be >= 3");
  }
  cfg.base_seed = detail::get_or<std::uint64_t>(j, "seed", cfg.base_seed);
  cfg.output_dir = detail::get_or<std::string>(j, "output_dir", ".");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse failure in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  return parse_config(j);
}

}  // namespace kpnp
