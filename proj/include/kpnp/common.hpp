#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kpnp {

using Vec = std::vector<double>;

// Error taxonomy; the CLI maps each class to a distinct exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct VerifyError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SolveError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Neumaier-compensated summation; keeps inner products accurate for large n.
inline double compensated_sum(const Vec& terms) {
  double s = 0.0, c = 0.0;
  for (double t : terms) {
    double u = s + t;
    if (std::abs(s) >= std::abs(t))
      c += (s - u) + t;
    else
      c += (t - u) + s;
    s = u;
  }
  return s + c;
}

inline double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] * b[i];
    double u = s + t;
    if (std::abs(s) >= std::abs(t))
      c += (s - u) + t;
    else
      c += (t - u) + s;
    s = u;
  }
  return s + c;
}

inline double nrm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec& axpy(double alpha, const Vec& x, Vec& y) {
  require(x.size() == y.size(), "axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  return y;
}

inline Vec sub(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "sub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "add: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scaled(double alpha, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
  return r;
}

inline Vec ones(std::size_t n) { return Vec(n, 1.0); }

// Euclidean-style modulo onto [0, n); used for toroidal indexing.
inline int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Runs fn(begin, end) over [0, n) split across nthreads workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned nthreads, Fn&& fn) {
  if (n == 0) return;
  if (nthreads <= 1 || n < 2 * nthreads) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (unsigned t = 0; t < nthreads; ++t) {
    std::size_t b = std::min<std::size_t>(n, std::size_t{t} * chunk);
    std::size_t e = std::min<std::size_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

// Seeded generator with a fixed cross-platform sequence, so that masks,
// noise, and power-method starts are bit-reproducible from a config seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {
    // warm up splitmix so nearby seeds decorrelate
    next();
    next();
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, bound)
  std::uint64_t below(std::uint64_t bound) {
    require(bound > 0, "Rng::below: bound must be positive");
    std::uint64_t threshold = -bound % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec uniform_vec(std::size_t n) {
    Vec v(n);
    for (auto& x : v) x = uniform();
    return v;
  }

  Vec normal_vec(std::size_t n) {
    Vec v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kpnp
