#pragma once

// Test-only reference implementations. These are deliberately naive
// (per-patch pixel loops, full sorts, scalar dot products) and share no code
// with the optimized library paths beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "evs/tensor.hpp"

namespace evs::oracle {

// Mean absolute difference per patch, looping over every pixel of every patch.
inline std::vector<double> rgb_diffs(const VideoClip& clip, int patch) {
  const int w = static_cast<int>(clip.width()), h = static_cast<int>(clip.height());
  const int gw = (w + patch - 1) / patch, gh = (h + patch - 1) / patch;
  std::vector<double> out;
  for (std::size_t t = 1; t < clip.frames(); ++t)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t c = 0; c < clip.channels(); ++c)
          for (int y = gy * patch; y < std::min(h, (gy + 1) * patch); ++y)
            for (int x = gx * patch; x < std::min(w, (gx + 1) * patch); ++x) {
              sum += std::fabs(clip.at(t, c, y, x) - clip.at(t - 1, c, y, x));
              ++count;
            }
        out.push_back(sum / count);
      }
  return out;
}

inline double scalar_cosine_diff(const EmbeddingGrid& g, std::size_t cur, std::size_t prev) {
  const auto a = g.feature(cur);
  const auto b = g.feature(prev);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0);
}

inline std::vector<double> embedding_diffs(const EmbeddingGrid& g) {
  std::vector<double> out;
  const std::size_t per = g.shape().sites_per_frame();
  for (std::size_t i = per; i < g.shape().sites(); ++i)
    out.push_back(scalar_cosine_diff(g, i, i - per));
  return out;
}

// round-half-up of (1-q)*n evaluated with a small guard against 0.1-style
// representation error.
inline std::size_t budget(double q, std::size_t n) {
  return static_cast<std::size_t>(std::floor((1.0 - q) * static_cast<double>(n) + 0.5 + 1e-9));
}

// Literal application of the selection rules by sorting everything.
inline std::vector<std::uint8_t> mask_bits(const std::vector<double>& diffs,
                                           std::size_t per_frame, double q, bool exact_budget) {
  std::vector<std::uint8_t> bits(per_frame + diffs.size(), 0);
  std::fill_n(bits.begin(), per_frame, 1);
  if (diffs.empty()) return bits;
  if (!exact_budget) {
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * sorted.size() - 1e-9));
    const double d = sorted[rank == 0 ? 0 : rank - 1];
    for (std::size_t i = 0; i < diffs.size(); ++i) bits[per_frame + i] = diffs[i] >= d;
    return bits;
  }
  std::vector<std::size_t> idx(diffs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (diffs[a] != diffs[b]) return diffs[a] > diffs[b];
    return a < b;
  });
  const std::size_t keep = budget(q, diffs.size());
  for (std::size_t k = 0; k < keep; ++k) bits[per_frame + idx[k]] = 1;
  return bits;
}

// --- generators -------------------------------------------------------------

inline VideoClip random_u8_clip(std::mt19937_64& rng, std::size_t frames, std::size_t h,
                                std::size_t w, int max_value = 255) {
  std::uniform_int_distribution<int> px(0, max_value);
  std::vector<std::uint8_t> data(frames * 3 * h * w);
  for (auto& v : data) v = static_cast<std::uint8_t>(px(rng));
  return {frames, 3, h, w, std::move(data)};
}

inline EmbeddingGrid random_grid(std::mt19937_64& rng, GridShape shape, std::size_t channels) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> data(shape.sites() * channels);
  for (auto& v : data) v = n(rng);
  return {shape, channels, std::move(data)};
}

inline RetentionMask random_valid_mask(std::mt19937_64& rng, GridShape shape, double p_keep = 0.5) {
  std::bernoulli_distribution keep(p_keep);
  RetentionMask m = RetentionMask::all_ones(shape, 0.5, SelectorTag::random);
  for (std::size_t i = shape.sites_per_frame(); i < shape.sites(); ++i) m.bits[i] = keep(rng);
  return m;
}

}  // namespace evs::oracle
