#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "kpnp/common.hpp"

namespace kpnp {

// Row-major grayscale image with intensities nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  Vec data;

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h), data(std::size_t(w) * h, fill) {
    require(w > 0 && h > 0, "Image: dimensions must be positive");
  }

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
  double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

inline double mse(const Vec& a, const Vec& b) {
  require(a.size() == b.size() && !a.empty(), "mse: dimension mismatch");
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    double t = d * d;
    double u = s + t;
    if (std::abs(s) >= std::abs(t))
      c += (s - u) + t;
    else
      c += (t - u) + s;
    s = u;
  }
  return (s + c) / double(a.size());
}

// Peak signal-to-noise ratio against peak value 1; identical inputs give +inf.
inline double psnr(const Vec& x, const Vec& ref) {
  double m = mse(x, ref);
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

inline Vec clamp01(const Vec& v) {
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = std::clamp(v[i], 0.0, 1.0);
  return r;
}

// Smooth synthetic test image: offset sinusoid ramp plus a centered disc.
// Deterministic and resolution-independent, used when no input file is given.
inline Image synthetic_image(int w, int h) {
  Image img(w, h);
  double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  double rad = 0.3 * std::min(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double u = (w > 1) ? double(x) / (w - 1) : 0.0;
      double v = (h > 1) ? double(y) / (h - 1) : 0.0;
      double val = 0.35 + 0.25 * u + 0.15 * v + 0.1 * std::sin(6.0 * u + 4.0 * v);
      double dx = x - cx, dy = y - cy;
      if (std::sqrt(dx * dx + dy * dy) < rad) val += 0.15;
      img.at(x, y) = std::clamp(val, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace kpnp
