#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evs/detail/rounding.hpp"
#include "evs/error.hpp"
#include "evs/geometry.hpp"
#include "evs/tensor.hpp"

namespace evs {

/// Per-site change between consecutive frames. `grid` is the full clip grid
/// (T frames); values cover frames 1..T-1, so value i belongs to mask bit
/// i + H'*W'.
struct DiffField {
  GridShape grid;
  std::vector<double> values;

  std::size_t diff_frames() const { return grid.frames == 0 ? 0 : grid.frames - 1; }
  bool empty() const { return values.empty(); }

  double at(std::size_t t, std::size_t y, std::size_t x) const {
    // t indexes frames of the clip, 1..T-1
    return values[((t - 1) * grid.height + y) * grid.width + x];
  }

  void validate() const {
    require(grid.frames >= 1, "diff field needs a grid with >= 1 frame");
    require(values.size() == grid.prunable_sites(),
            "diff field holds " + std::to_string(values.size()) +
                " values for grid " + to_string(grid));
    for (double v : values)
      require(std::isfinite(v) && v >= 0.0, "diff values must be finite and >= 0");
  }
};

enum class ThresholdMode { threshold, exact_budget };

inline std::string_view to_string(ThresholdMode m) {
  return m == ThresholdMode::threshold ? "threshold" : "exact-budget";
}

inline ThresholdMode threshold_mode_from(std::string_view s) {
  if (s == "threshold") return ThresholdMode::threshold;
  if (s == "exact-budget") return ThresholdMode::exact_budget;
  fail(ErrorCode::invalid_argument, "unknown threshold mode '" + std::string(s) + "'");
}

struct PruningConfig {
  double pruning_rate = 0.75;
  ThresholdMode mode = ThresholdMode::exact_budget;
  SelectorTag selector = SelectorTag::rgb;

  void validate() const {
    require(pruning_rate >= 0.0 && pruning_rate < 1.0,
            "pruning rate must lie in [0, 1)");
  }
};

/// Retained-token count of an exact-budget mask: the whole anchor frame plus
/// round((1-q) * prunable sites).
inline std::size_t exact_budget_count(const GridShape& grid, double q) {
  return grid.sites_per_frame() + detail::kept_count(q, grid.prunable_sites());
}

/// Nearest-rank q-quantile: the element at index ceil(q*N)-1 of the sorted
/// values (index 0 when q = 0).
inline double percentile_threshold(std::span<const double> values, double q) {
  require(!values.empty(), "percentile of an empty diff field");
  require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
  const std::size_t rank = detail::ceil_count(q * static_cast<double>(values.size()));
  const std::size_t index = rank == 0 ? 0 : rank - 1;
  std::vector<double> scratch(values.begin(), values.end());
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(index),
                   scratch.end());
  return scratch[index];
}

inline double percentile_threshold(const DiffField& diffs, double q) {
  return percentile_threshold(diffs.values, q);
}

/// Turns a diff field into a retention mask. Frame 0 is always kept.
///  - threshold: keep site iff D >= d, d the nearest-rank q-quantile.
///  - exact-budget: keep the round((1-q)*N) largest diffs, ties to the
///    earlier site in canonical order.
inline RetentionMask build_mask(const DiffField& diffs, const PruningConfig& config) {
  config.validate();
  diffs.validate();
  RetentionMask mask;
  mask.shape = diffs.grid;
  mask.pruning_rate_used = config.pruning_rate;
  mask.selector = config.selector;
  mask.bits.assign(diffs.grid.sites(), 0);

  const std::size_t anchor = diffs.grid.sites_per_frame();
  std::fill_n(mask.bits.begin(), anchor, std::uint8_t{1});
  const std::size_t n = diffs.values.size();
  if (n == 0) return mask;

  const auto& v = diffs.values;
  if (config.mode == ThresholdMode::threshold) {
    const double d = percentile_threshold(v, config.pruning_rate);
    for (std::size_t i = 0; i < n; ++i) mask.bits[anchor + i] = v[i] >= d;
    return mask;
  }

  const std::size_t keep = detail::kept_count(config.pruning_rate, n);
  if (keep >= n) {
    std::fill(mask.bits.begin() + static_cast<std::ptrdiff_t>(anchor), mask.bits.end(),
              std::uint8_t{1});
    return mask;
  }
  if (keep == 0) return mask;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto larger_first = [&v](std::size_t a, std::size_t b) {
    return v[a] > v[b] || (v[a] == v[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                   order.end(), larger_first);
  for (std::size_t k = 0; k < keep; ++k) mask.bits[anchor + order[k]] = 1;
  return mask;
}

}  // namespace evs
