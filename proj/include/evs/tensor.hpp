#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evs/error.hpp"
#include "evs/geometry.hpp"

namespace evs {

enum class PixelType { u8, f32 };

inline std::string_view to_string(PixelType t) {
  return t == PixelType::u8 ? "u8" : "f32";
}

/// Dense video in T x C x H x W layout.
class VideoClip {
 public:
  VideoClip() = default;

  VideoClip(std::size_t frames, std::size_t channels, std::size_t height,
            std::size_t width, std::vector<std::uint8_t> data)
      : frames_(frames), channels_(channels), height_(height), width_(width),
        data_(std::move(data)) {
    validate();
  }

  VideoClip(std::size_t frames, std::size_t channels, std::size_t height,
            std::size_t width, std::vector<float> data)
      : frames_(frames), channels_(channels), height_(height), width_(width),
        data_(std::move(data)) {
    validate();
  }

  static VideoClip zeros(std::size_t frames, std::size_t channels,
                         std::size_t height, std::size_t width,
                         PixelType type = PixelType::u8) {
    const std::size_t n = frames * channels * height * width;
    if (type == PixelType::u8)
      return {frames, channels, height, width, std::vector<std::uint8_t>(n)};
    return {frames, channels, height, width, std::vector<float>(n)};
  }

  std::size_t frames() const { return frames_; }
  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return frames_ * channels_ * height_ * width_; }
  PixelType pixel_type() const {
    return std::holds_alternative<std::vector<std::uint8_t>>(data_)
               ? PixelType::u8
               : PixelType::f32;
  }

  std::size_t offset(std::size_t t, std::size_t c, std::size_t y,
                     std::size_t x) const {
    return ((t * channels_ + c) * height_ + y) * width_ + x;
  }

  double at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const {
    const std::size_t i = offset(t, c, y, x);
    if (const auto* u = std::get_if<std::vector<std::uint8_t>>(&data_))
      return (*u)[i];
    return std::get<std::vector<float>>(data_)[i];
  }

  std::span<const std::uint8_t> u8() const {
    return std::get<std::vector<std::uint8_t>>(data_);
  }
  std::span<std::uint8_t> u8() {
    return std::get<std::vector<std::uint8_t>>(data_);
  }
  std::span<const float> f32() const {
    return std::get<std::vector<float>>(data_);
  }
  std::span<float> f32() { return std::get<std::vector<float>>(data_); }

  friend bool operator==(const VideoClip&, const VideoClip&) = default;

 private:
  void validate() const {
    require(frames_ >= 1, "clip needs at least one frame");
    require(channels_ >= 1 && height_ >= 1 && width_ >= 1,
            "clip dimensions must be positive");
    const std::size_t n = std::visit([](const auto& v) { return v.size(); },
                                     data_);
    require(n == size(), "clip data length " + std::to_string(n) +
                             " does not match shape product " +
                             std::to_string(size()));
  }

  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::variant<std::vector<std::uint8_t>, std::vector<float>> data_;
};

/// Post-encoder features stored T x H' x W' x C so each site's vector is
/// contiguous.
class EmbeddingGrid {
 public:
  EmbeddingGrid() = default;

  EmbeddingGrid(GridShape shape, std::size_t channels, std::vector<float> data)
      : shape_(shape), channels_(channels), data_(std::move(data)) {
    require(shape_.frames >= 1 && shape_.height >= 1 && shape_.width >= 1,
            "embedding grid dimensions must be positive");
    require(channels_ >= 1, "embedding channels must be >= 1");
    require(data_.size() == shape_.sites() * channels_,
            "embedding data length does not match shape");
    for (float v : data_)
      if (!std::isfinite(v))
        fail(ErrorCode::invalid_argument, "embedding contains NaN or Inf");
  }

  const GridShape& shape() const { return shape_; }
  std::size_t channels() const { return channels_; }
  std::span<const float> data() const { return data_; }

  std::span<const float> feature(std::size_t flat) const {
    return std::span<const float>(data_).subspan(flat * channels_, channels_);
  }
  std::span<const float> feature(const TokenSite& s) const {
    return feature(flat_index(s, shape_));
  }

  friend bool operator==(const EmbeddingGrid&, const EmbeddingGrid&) = default;

 private:
  GridShape shape_;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

enum class SelectorTag { rgb, embedding, random, subsample, merge };

inline std::string_view to_string(SelectorTag t) {
  switch (t) {
    case SelectorTag::rgb: return "rgb";
    case SelectorTag::embedding: return "embedding";
    case SelectorTag::random: return "random";
    case SelectorTag::subsample: return "subsample";
    case SelectorTag::merge: return "merge";
  }
  return "rgb";
}

inline SelectorTag selector_tag_from(std::string_view s) {
  for (auto t : {SelectorTag::rgb, SelectorTag::embedding, SelectorTag::random,
                 SelectorTag::subsample, SelectorTag::merge})
    if (to_string(t) == s) return t;
  fail(ErrorCode::invalid_argument, "unknown selector tag '" + std::string(s) + "'");
}

/// Keep/drop decision per token site, in canonical order.
struct RetentionMask {
  GridShape shape;
  std::vector<std::uint8_t> bits;  // 0 or 1, one per site
  double pruning_rate_used = 0.0;
  SelectorTag selector = SelectorTag::rgb;

  static RetentionMask all_ones(GridShape shape, double q, SelectorTag tag) {
    return {shape, std::vector<std::uint8_t>(shape.sites(), 1), q, tag};
  }

  bool kept(std::size_t flat) const { return bits[flat] != 0; }
  bool kept(const TokenSite& s) const { return kept(flat_index(s, shape)); }

  std::size_t kept_count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  // Throws invalid-mask when the bit count or the frame-0 anchor is broken.
  void validate() const {
    if (bits.size() != shape.sites())
      fail(ErrorCode::invalid_mask, "mask has " + std::to_string(bits.size()) +
                                        " bits for grid " + to_string(shape));
    for (std::size_t i = 0; i < shape.sites_per_frame() && i < bits.size(); ++i)
      if (!bits[i])
        fail(ErrorCode::invalid_mask,
             "frame-0 site " + std::to_string(i) + " is not kept");
  }

  friend bool operator==(const RetentionMask&, const RetentionMask&) = default;
};

enum class PositionMode { preserving, sequential };

inline std::string_view to_string(PositionMode m) {
  return m == PositionMode::preserving ? "preserving" : "sequential";
}

inline PositionMode position_mode_from(std::string_view s) {
  if (s == "preserving" || s == "preserve") return PositionMode::preserving;
  if (s == "sequential") return PositionMode::sequential;
  fail(ErrorCode::invalid_argument, "unknown position mode '" + std::string(s) + "'");
}

struct TokenEntry {
  std::uint32_t position_id = 0;
  TokenSite site;
  std::vector<float> payload;  // empty when no features were gathered

  friend bool operator==(const TokenEntry&, const TokenEntry&) = default;
};

/// Retained tokens with their position IDs, in canonical site order.
struct TokenStream {
  GridShape shape;
  PositionMode mode = PositionMode::preserving;
  std::size_t payload_channels = 0;  // 0: mask-only stream
  std::vector<TokenEntry> entries;

  std::size_t source_token_count() const { return shape.sites(); }

  // Throws invalid-stream on ordering, position-id or payload violations.
  void validate() const {
    std::size_t prev = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      if (!in_bounds(e.site, shape))
        fail(ErrorCode::invalid_stream, "entry " + std::to_string(k) +
                                            " lies outside grid " +
                                            to_string(shape));
      const std::size_t flat = flat_index(e.site, shape);
      if (k > 0 && flat <= prev)
        fail(ErrorCode::invalid_stream,
             "entries are not strictly increasing at " + std::to_string(k));
      prev = flat;
      const std::size_t expected = mode == PositionMode::sequential ? k : flat;
      if (e.position_id != expected)
        fail(ErrorCode::invalid_stream,
             "entry " + std::to_string(k) + " has position id " +
                 std::to_string(e.position_id) + ", expected " +
                 std::to_string(expected));
      if (e.payload.size() != payload_channels)
        fail(ErrorCode::invalid_stream,
             "entry " + std::to_string(k) + " payload length mismatch");
    }
  }

  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

}  // namespace evs
