#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "kpnp/image.hpp"
#include "kpnp/linop.hpp"

namespace kpnp {

enum class TaskKind { inpaint, deblur, superres };

inline std::string task_name(TaskKind k) {
  switch (k) {
    case TaskKind::inpaint: return "inpaint";
    case TaskKind::deblur: return "deblur";
    case TaskKind::superres: return "superres";
  }
  return "?";
}

// Odd-sized nonnegative tap stencil normalized to sum 1, so that blurring
// preserves constants exactly.
struct BlurKernel {
  int half_w = 0;
  int half_h = 0;
  std::vector<double> taps;  // (2*half_h+1) x (2*half_w+1), row-major

  double tap(int dx, int dy) const {
    return taps[std::size_t(dy + half_h) * (2 * half_w + 1) + (dx + half_w)];
  }

  void normalize() {
    double s = std::accumulate(taps.begin(), taps.end(), 0.0);
    require(s > 0.0, "BlurKernel: taps must have positive sum");
    for (double& t : taps) t /= s;
  }

  static BlurKernel gaussian(int size, double sigma) {
    require(size >= 1 && size % 2 == 1, "BlurKernel: size must be odd and positive");
    require(sigma > 0.0, "BlurKernel: sigma must be positive");
    BlurKernel k;
    k.half_w = k.half_h = size / 2;
    k.taps.resize(std::size_t(size) * size);
    for (int dy = -k.half_h; dy <= k.half_h; ++dy)
      for (int dx = -k.half_w; dx <= k.half_w; ++dx)
        k.taps[std::size_t(dy + k.half_h) * size + (dx + k.half_w)] =
            std::exp(-(double(dx) * dx + double(dy) * dy) / (2.0 * sigma * sigma));
    k.normalize();
    return k;
  }

  static BlurKernel uniform(int size) {
    require(size >= 1 && size % 2 == 1, "BlurKernel: size must be odd and positive");
    BlurKernel k;
    k.half_w = k.half_h = size / 2;
    k.taps.assign(std::size_t(size) * size, 1.0);
    k.normalize();
    return k;
  }

  static BlurKernel delta() { return uniform(1); }

  // File format: first line "rows cols", then rows*cols tap values.
  static BlurKernel from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("BlurKernel: cannot open " + path);
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw IoError("BlurKernel: malformed header in " + path);
    if (rows <= 0 || cols <= 0 || rows % 2 == 0 || cols % 2 == 0)
      throw IoError("BlurKernel: dimensions must be odd and positive in " + path);
    BlurKernel k;
    k.half_h = rows / 2;
    k.half_w = cols / 2;
    k.taps.resize(std::size_t(rows) * cols);
    for (double& t : k.taps)
      if (!(in >> t)) throw IoError("BlurKernel: truncated taps in " + path);
    for (double t : k.taps)
      if (t < 0.0) throw IoError("BlurKernel: taps must be nonnegative in " + path);
    k.normalize();
    return k;
  }
};

namespace detail {

// Circular 2-D convolution y(p) = sum_t k(t) x(p - t).
inline Vec conv_circular(const Vec& x, int w, int h, const BlurKernel& k) {
  Vec y(std::size_t(w) * h, 0.0);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      double s = 0.0;
      for (int dy = -k.half_h; dy <= k.half_h; ++dy) {
        int sy = wrap(py - dy, h);
        for (int dx = -k.half_w; dx <= k.half_w; ++dx) {
          int sx = wrap(px - dx, w);
          s += k.tap(dx, dy) * x[std::size_t(sy) * w + sx];
        }
      }
      y[std::size_t(py) * w + px] = s;
    }
  }
  return y;
}

// Adjoint of circular convolution is circular correlation.
inline Vec corr_circular(const Vec& x, int w, int h, const BlurKernel& k) {
  Vec y(std::size_t(w) * h, 0.0);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      double s = 0.0;
      for (int dy = -k.half_h; dy <= k.half_h; ++dy) {
        int sy = wrap(py + dy, h);
        for (int dx = -k.half_w; dx <= k.half_w; ++dx) {
          int sx = wrap(px + dx, w);
          s += k.tap(dx, dy) * x[std::size_t(sy) * w + sx];
        }
      }
      y[std::size_t(py) * w + px] = s;
    }
  }
  return y;
}

}  // namespace detail

// Measurement operator for one of the three tasks. Inpainting acts as an
// n x n diagonal 0/1 mask; deblurring as circular convolution; subsampled
// deblurring keeps every stride-th pixel anchored at the top-left corner.
struct ForwardModel {
  TaskKind kind = TaskKind::deblur;
  int width = 0;
  int height = 0;
  int out_width = 0;
  int out_height = 0;
  int stride = 1;
  BlurKernel kernel = BlurKernel::delta();
  std::vector<std::uint8_t> mask;  // inpainting only, 1 = observed
  LinearMap A;

  std::size_t n() const { return std::size_t(width) * height; }
  std::size_t m() const { return std::size_t(out_width) * out_height; }

  std::size_t observed_count() const {
    std::size_t c = 0;
    for (auto v : mask) c += v;
    return c;
  }

  // Sampling ratio mu, with mu = 1 for deblurring.
  double mu() const {
    switch (kind) {
      case TaskKind::inpaint: return double(observed_count()) / double(n());
      case TaskKind::deblur: return 1.0;
      case TaskKind::superres: return double(m()) / double(n());
    }
    return 1.0;
  }

  // ||A e||^2 in closed form: the observed count for inpainting, n for
  // deblurring, m for subsampled deblurring (constants pass through blur).
  double norm_Ae_squared_closed() const {
    switch (kind) {
      case TaskKind::inpaint: return double(observed_count());
      case TaskKind::deblur: return double(n());
      case TaskKind::superres: return double(m());
    }
    return 0.0;
  }

  double norm_Ae_squared_actual() const {
    Vec ae = A(ones(n()));
    return dot(ae, ae);
  }

  // The fixed points of the denoiser are the constants, so the null-space
  // condition reduces to A e != 0.
  bool restricted_null_property() const { return norm_Ae_squared_actual() > 0.0; }

  void check_consistency() const {
    double closed = norm_Ae_squared_closed();
    double actual = norm_Ae_squared_actual();
    double rel = std::abs(closed - actual) / std::max(1.0, std::abs(closed));
    if (rel > 1e-9)
      throw VerifyError("forward model: ||Ae||^2 closed form " + std::to_string(closed) +
                        " disagrees with operator value " + std::to_string(actual));
    if (!(actual > 0.0))
      throw VerifyError("forward model: A annihilates constants, null-space condition fails");
  }
};

inline ForwardModel make_inpainting(int w, int h, std::vector<std::uint8_t> mask) {
  require(w > 0 && h > 0, "make_inpainting: bad dimensions");
  require(mask.size() == std::size_t(w) * h, "make_inpainting: mask size mismatch");
  ForwardModel fm;
  fm.kind = TaskKind::inpaint;
  fm.width = fm.out_width = w;
  fm.height = fm.out_height = h;
  fm.mask = std::move(mask);
  require(fm.observed_count() >= 1, "make_inpainting: at least one pixel must be observed");
  auto mk = std::make_shared<std::vector<std::uint8_t>>(fm.mask);
  auto ap = [mk](const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (*mk)[i] ? x[i] : 0.0;
    return y;
  };
  fm.A = LinearMap(fm.n(), fm.n(), ap, ap);
  return fm;
}

// Observed set is a prefix of a seed-determined pixel permutation, so masks
// with the same seed are nested as the sampling ratio grows.
inline std::vector<std::uint8_t> random_mask(int w, int h, double mu_frac, std::uint64_t seed) {
  require(mu_frac > 0.0 && mu_frac <= 1.0, "random_mask: sampling ratio must be in (0, 1]");
  std::size_t n = std::size_t(w) * h;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(seed ^ 0x6d61736bULL);
  rng.shuffle(perm);
  std::size_t keep = std::size_t(std::llround(mu_frac * double(n)));
  keep = std::max<std::size_t>(1, std::min(n, keep));
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < keep; ++i) mask[perm[i]] = 1;
  return mask;
}

inline ForwardModel make_random_inpainting(int w, int h, double mu_frac, std::uint64_t seed) {
  return make_inpainting(w, h, random_mask(w, h, mu_frac, seed));
}

inline ForwardModel make_deblurring(int w, int h, const BlurKernel& k) {
  require(w > 0 && h > 0, "make_deblurring: bad dimensions");
  ForwardModel fm;
  fm.kind = TaskKind::deblur;
  fm.width = fm.out_width = w;
  fm.height = fm.out_height = h;
  fm.kernel = k;
  auto kk = std::make_shared<BlurKernel>(k);
  fm.A = LinearMap(
      fm.n(), fm.n(),
      [kk, w, h](const Vec& x) { return detail::conv_circular(x, w, h, *kk); },
      [kk, w, h](const Vec& y) { return detail::corr_circular(y, w, h, *kk); });
  return fm;
}

inline ForwardModel make_superres(int w, int h, const BlurKernel& k, int stride) {
  require(w > 0 && h > 0, "make_superres: bad dimensions");
  require(stride >= 1, "make_superres: stride must be >= 1");
  ForwardModel fm;
  fm.kind = TaskKind::superres;
  fm.width = w;
  fm.height = h;
  fm.stride = stride;
  fm.out_width = (w + stride - 1) / stride;
  fm.out_height = (h + stride - 1) / stride;
  fm.kernel = k;
  auto kk = std::make_shared<BlurKernel>(k);
  int ow = fm.out_width, oh = fm.out_height;
  fm.A = LinearMap(
      fm.m(), fm.n(),
      [kk, w, h, ow, oh, stride](const Vec& x) {
        Vec blurred = detail::conv_circular(x, w, h, *kk);
        Vec y(std::size_t(ow) * oh);
        for (int yc = 0; yc < oh; ++yc)
          for (int xc = 0; xc < ow; ++xc)
            y[std::size_t(yc) * ow + xc] = blurred[std::size_t(yc) * stride * w + xc * stride];
        return y;
      },
      [kk, w, h, ow, oh, stride](const Vec& y) {
        Vec up(std::size_t(w) * h, 0.0);
        for (int yc = 0; yc < oh; ++yc)
          for (int xc = 0; xc < ow; ++xc)
            up[std::size_t(yc) * stride * w + xc * stride] = y[std::size_t(yc) * ow + xc];
        return detail::corr_circular(up, w, h, *kk);
      });
  return fm;
}

// Builds the denoiser guide image from the degraded data: the observation
// itself for deblurring, hole filling by iterated 3x3 neighborhood means for
// inpainting, nearest-neighbor upsampling for subsampled deblurring.
inline Image make_guide(const ForwardModel& fm, const Vec& b) {
  int w = fm.width, h = fm.height;
  Image g(w, h);
  switch (fm.kind) {
    case TaskKind::deblur: {
      require(b.size() == fm.n(), "make_guide: observation size mismatch");
      g.data = b;
      return g;
    }
    case TaskKind::superres: {
      require(b.size() == fm.m(), "make_guide: observation size mismatch");
      for (int y = 0; y < h; ++y) {
        int yc = std::min(y / fm.stride, fm.out_height - 1);
        for (int x = 0; x < w; ++x) {
          int xc = std::min(x / fm.stride, fm.out_width - 1);
          g.at(x, y) = b[std::size_t(yc) * fm.out_width + xc];
        }
      }
      return g;
    }
    case TaskKind::inpaint: {
      require(b.size() == fm.n(), "make_guide: observation size mismatch");
      g.data = b;
      std::vector<std::uint8_t> known = fm.mask;
      // Synchronous sweeps: each pass fills holes adjacent to known pixels
      // with their 3x3 known-neighbor mean, until no hole remains.
      for (;;) {
        std::size_t holes = 0;
        for (auto v : known) holes += (v == 0);
        if (holes == 0) break;
        Image next = g;
        std::vector<std::uint8_t> next_known = known;
        std::size_t filled = 0;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (known[std::size_t(y) * w + x]) continue;
            double s = 0.0;
            int c = 0;
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (!known[std::size_t(ny) * w + nx]) continue;
                s += g.at(nx, ny);
                ++c;
              }
            }
            if (c > 0) {
              next.at(x, y) = s / c;
              next_known[std::size_t(y) * w + x] = 1;
              ++filled;
            }
          }
        }
        require(filled > 0, "make_guide: fill cannot progress (empty mask?)");
        g = std::move(next);
        known = std::move(next_known);
      }
      return g;
    }
  }
  throw Error("make_guide: unknown task kind");
}

// Synthesizes the observation b = A(x) plus Gaussian noise. For inpainting
// the noise is masked so that unobserved entries stay exactly zero.
inline Vec degrade(const ForwardModel& fm, const Vec& x, double noise_sigma, Rng& rng) {
  Vec b = fm.A(x);
  if (noise_sigma > 0.0) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      double eta = noise_sigma * rng.normal();
      if (fm.kind == TaskKind::inpaint && !fm.mask[i]) continue;
      b[i] += eta;
    }
  }
  return b;
}

}  // namespace kpnp
