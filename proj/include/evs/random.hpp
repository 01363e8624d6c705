#pragma once

// Seeded random routines built only on std::mt19937_64 output, whose
// sequence is fixed by the standard. The std:: distributions are
// implementation-defined, so they are not used where reproducibility across
// toolchains matters.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace evs {

using Engine = std::mt19937_64;

/// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = eng();
  } while (v >= limit);
  return v % n;
}

/// Uniform double in the open interval (0, 1).
inline double uniform_open01(Engine& eng) {
  double u;
  do {
    u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  } while (u == 0.0);
  return u;
}

/// Standard normal via the Marsaglia polar method.
inline double standard_normal(Engine& eng) {
  double u, v, s;
  do {
    u = 2.0 * uniform_open01(eng) - 1.0;
    v = 2.0 * uniform_open01(eng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

/// Gamma(shape, 1) by Marsaglia and Tsang; shapes below 1 use the
/// U^(1/shape) boost.
inline double gamma_variate(Engine& eng, double shape) {
  if (shape < 1.0) {
    const double g = gamma_variate(eng, shape + 1.0);
    return g * std::pow(uniform_open01(eng), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(eng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01(eng);
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace evs
