#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>

#include "evs/error.hpp"

namespace evs {

/// Pixels covered by one vision token: the encoder stem patch times the
/// projector's spatial downsampling factor.
inline int effective_patch_size(int encoder_patch, int projector_downsample) {
  require(encoder_patch >= 1, "encoder patch must be >= 1");
  require(projector_downsample >= 1, "projector downsample must be >= 1");
  return encoder_patch * projector_downsample;
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

/// Token-grid shape (T x H' x W') shared by masks, diff fields and streams.
struct GridShape {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t sites_per_frame() const { return height * width; }
  std::size_t sites() const { return frames * height * width; }
  std::size_t prunable_sites() const {
    return frames == 0 ? 0 : (frames - 1) * sites_per_frame();
  }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

inline std::string to_string(const GridShape& s) {
  return std::to_string(s.frames) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

struct TokenSite {
  std::uint32_t t = 0;
  std::uint32_t y = 0;
  std::uint32_t x = 0;

  friend bool operator==(const TokenSite&, const TokenSite&) = default;
};

/// Pixel extent of one token cell; edge cells may be partial.
struct PatchRect {
  int x0, y0, x1, y1;  // half-open
  int pixels() const { return (x1 - x0) * (y1 - y0); }
};

/// Maps a frame of W x H pixels onto the token grid. Partial patches on the
/// right and bottom edges are ordinary cells covering only what exists.
class PatchGeometry {
 public:
  PatchGeometry(int frame_width, int frame_height, int encoder_patch,
                int projector_downsample = 1)
      : frame_width_(frame_width),
        frame_height_(frame_height),
        encoder_patch_(encoder_patch),
        projector_downsample_(projector_downsample),
        effective_patch_(
            effective_patch_size(encoder_patch, projector_downsample)) {
    require(frame_width >= 1 && frame_height >= 1,
            "frame dimensions must be positive");
    grid_width_ = ceil_div(frame_width_, effective_patch_);
    grid_height_ = ceil_div(frame_height_, effective_patch_);
  }

  int frame_width() const { return frame_width_; }
  int frame_height() const { return frame_height_; }
  int encoder_patch() const { return encoder_patch_; }
  int projector_downsample() const { return projector_downsample_; }
  int effective_patch() const { return effective_patch_; }
  int grid_width() const { return grid_width_; }
  int grid_height() const { return grid_height_; }

  GridShape grid(std::size_t frames) const {
    return {frames, static_cast<std::size_t>(grid_height_),
            static_cast<std::size_t>(grid_width_)};
  }

  PatchRect patch_rect(int y, int x) const {
    const int x0 = x * effective_patch_;
    const int y0 = y * effective_patch_;
    return {x0, y0, std::min(x0 + effective_patch_, frame_width_),
            std::min(y0 + effective_patch_, frame_height_)};
  }

 private:
  int frame_width_;
  int frame_height_;
  int encoder_patch_;
  int projector_downsample_;
  int effective_patch_;
  int grid_width_ = 0;
  int grid_height_ = 0;
};

inline bool in_bounds(const TokenSite& s, const GridShape& g) {
  return s.t < g.frames && s.y < g.height && s.x < g.width;
}

/// Canonical order: frame-major, then row-major inside a frame.
inline std::size_t flat_index(const TokenSite& s, const GridShape& g) {
  require(in_bounds(s, g), "token site (" + std::to_string(s.t) + "," +
                               std::to_string(s.y) + "," +
                               std::to_string(s.x) + ") outside grid " +
                               to_string(g));
  return (static_cast<std::size_t>(s.t) * g.height + s.y) * g.width + s.x;
}

inline std::size_t flat_index(const TokenSite& s, const PatchGeometry& geom,
                              std::size_t frames) {
  return flat_index(s, geom.grid(frames));
}

inline TokenSite site_at(std::size_t index, const GridShape& g) {
  require(index < g.sites(), "flat index outside grid");
  const std::size_t per_frame = g.sites_per_frame();
  const std::size_t in_frame = index % per_frame;
  return {static_cast<std::uint32_t>(index / per_frame),
          static_cast<std::uint32_t>(in_frame / g.width),
          static_cast<std::uint32_t>(in_frame % g.width)};
}

}  // namespace evs
