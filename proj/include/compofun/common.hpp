#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cf {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};
class DomainError : public Error {
public:
  using Error::Error;
};
class CompatibilityError : public Error {
public:
  using Error::Error;
};
class SchemaError : public Error {
public:
  using Error::Error;
};
class ConfigError : public Error {
public:
  using Error::Error;
};
class MergeBlockedError : public Error {
public:
  using Error::Error;
};
class DivisionSafetyError : public Error {
public:
  using Error::Error;
};
class ContractionError : public Error {
public:
  using Error::Error;
};
class InvarianceError : public Error {
public:
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] used for range propagation.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  double absmax() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return v >= lo && v <= hi; }

  static Interval all() { return {-kInf, kInf}; }
  static Interval point(double v) { return {v, v}; }
  static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator*(double c, Interval a) {
  return c >= 0 ? Interval{c * a.lo, c * a.hi} : Interval{c * a.hi, c * a.lo};
}
inline Interval operator*(Interval a, Interval b) {
  double v[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(v, v + 4), *std::max_element(v, v + 4)};
}

/// p-norm of a vector; p = kInf means the max norm.
inline double pnorm(const std::vector<double>& v, double p) {
  if (std::isinf(p)) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

/// Van der Corput radical inverse in the given base.
inline double halton(uint64_t index, uint32_t base) {
  double f = 1.0, r = 0.0;
  uint64_t i = index + 1;  // skip the origin
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

/// d-dimensional Halton point in [0,1)^d.
inline std::vector<double> halton_point(uint64_t index, int d) {
  static const uint32_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                    31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  std::vector<double> p(d);
  for (int k = 0; k < d; ++k) p[k] = halton(index, primes[k % 20]);
  return p;
}

/// Deterministic RNG wrapper; every stochastic estimate in the library takes a seed.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(eng);
  }
  double normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(eng);
  }
  int integer(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(eng);
  }
};

}  // namespace cf
