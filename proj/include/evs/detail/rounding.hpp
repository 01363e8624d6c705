#pragma once

#include <cmath>
#include <cstddef>

namespace evs::detail {

// Products like 0.7 * 10 land a few ulps off the integer they denote; snap
// those back before ceil/round so decimal rates behave as written.
inline double snap_integral(double x) {
  const double r = std::round(x);
  const double scale = std::fabs(x) > 1.0 ? std::fabs(x) : 1.0;
  return std::fabs(x - r) <= 1e-9 * scale ? r : x;
}

// round((1 - q) * n), half away from zero. Snapped at half-integer
// resolution: (1 - 0.95) * 10 must round as 0.5, not 0.4999...
inline std::size_t kept_count(double q, std::size_t n) {
  const double twice = snap_integral(2.0 * (1.0 - q) * static_cast<double>(n));
  return static_cast<std::size_t>(std::round(twice / 2.0));
}

// ceil(x) after snapping.
inline std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(snap_integral(x)));
}

}  // namespace evs::detail
