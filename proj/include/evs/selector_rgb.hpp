#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evs/detail/parallel.hpp"
#include "evs/diff_field.hpp"
#include "evs/geometry.hpp"
#include "evs/tensor.hpp"

namespace evs {

namespace detail {

// Sums |a - b| over every channel and pixel of each patch for one frame pair,
// accumulating each patch in (channel, row, column) order.
template <class Pixel>
void patch_abs_diff_sums(const Pixel* prev, const Pixel* cur, std::size_t channels,
                         const PatchGeometry& geom, double* sums) {
  const std::size_t w = static_cast<std::size_t>(geom.frame_width());
  const std::size_t h = static_cast<std::size_t>(geom.frame_height());
  const std::size_t gw = static_cast<std::size_t>(geom.grid_width());
  const std::size_t ep = static_cast<std::size_t>(geom.effective_patch());
  for (std::size_t c = 0; c < channels; ++c) {
    const std::size_t plane = c * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      double* row_sums = sums + (y / ep) * gw;
      const Pixel* a = prev + plane + y * w;
      const Pixel* b = cur + plane + y * w;
      for (std::size_t x = 0; x < w; ++x)
        row_sums[x / ep] += std::fabs(static_cast<double>(b[x]) - static_cast<double>(a[x]));
    }
  }
}

}  // namespace detail

/// Mean absolute pixel difference per patch between frames t and t-1, for
/// t = 1..T-1. u8 pixels are promoted to double before differencing.
inline DiffField compute_rgb_diffs(const VideoClip& clip, const PatchGeometry& geom,
                                   unsigned threads = 1) {
  require(static_cast<int>(clip.width()) == geom.frame_width() &&
              static_cast<int>(clip.height()) == geom.frame_height(),
          "clip is " + std::to_string(clip.width()) + "x" + std::to_string(clip.height()) +
              " but geometry expects " + std::to_string(geom.frame_width()) + "x" +
              std::to_string(geom.frame_height()));
  if (clip.pixel_type() == PixelType::f32)
    for (float v : clip.f32())
      require(std::isfinite(v), "clip contains NaN or Inf pixels");

  DiffField diffs;
  diffs.grid = geom.grid(clip.frames());
  const std::size_t per_frame = diffs.grid.sites_per_frame();
  diffs.values.assign(diffs.grid.prunable_sites(), 0.0);
  const std::size_t frame_elems = clip.channels() * clip.height() * clip.width();

  std::vector<double> sample_count(per_frame);
  for (int y = 0; y < geom.grid_height(); ++y)
    for (int x = 0; x < geom.grid_width(); ++x)
      sample_count[static_cast<std::size_t>(y * geom.grid_width() + x)] =
          static_cast<double>(geom.patch_rect(y, x).pixels()) *
          static_cast<double>(clip.channels());

  detail::parallel_for(diffs.diff_frames(), threads, [&](std::size_t k) {
    double* sums = diffs.values.data() + k * per_frame;
    if (clip.pixel_type() == PixelType::u8) {
      const auto* base = clip.u8().data();
      detail::patch_abs_diff_sums(base + k * frame_elems, base + (k + 1) * frame_elems,
                                  clip.channels(), geom, sums);
    } else {
      const auto* base = clip.f32().data();
      detail::patch_abs_diff_sums(base + k * frame_elems, base + (k + 1) * frame_elems,
                                  clip.channels(), geom, sums);
    }
    for (std::size_t i = 0; i < per_frame; ++i) sums[i] /= sample_count[i];
  });
  return diffs;
}

/// RGB-space EVS mask for a clip.
inline RetentionMask build_mask_rgb(const VideoClip& clip, const PatchGeometry& geom,
                                    PruningConfig config, unsigned threads = 1) {
  config.selector = SelectorTag::rgb;
  return build_mask(compute_rgb_diffs(clip, geom, threads), config);
}

}  // namespace evs
