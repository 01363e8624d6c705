#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "evs/error.hpp"
#include "evs/tensor.hpp"

namespace evs {

/// Gathers the kept sites of `mask` (and their features, when a grid is
/// given) into a token stream.
///  - preserving: each token keeps its flat index in the unpruned grid.
///  - sequential: tokens are renumbered 0..K-1.
inline TokenStream gather_tokens(const EmbeddingGrid* grid, const RetentionMask& mask,
                                 PositionMode mode) {
  mask.validate();
  if (grid != nullptr && !(grid->shape() == mask.shape))
    fail(ErrorCode::invalid_argument, "mask grid " + to_string(mask.shape) +
                                          " does not match embedding grid " +
                                          to_string(grid->shape()));
  TokenStream stream;
  stream.shape = mask.shape;
  stream.mode = mode;
  stream.payload_channels = grid != nullptr ? grid->channels() : 0;
  stream.entries.reserve(mask.kept_count());
  for (std::size_t flat = 0; flat < mask.bits.size(); ++flat) {
    if (!mask.bits[flat]) continue;
    TokenEntry e;
    e.site = site_at(flat, mask.shape);
    e.position_id = static_cast<std::uint32_t>(
        mode == PositionMode::preserving ? flat : stream.entries.size());
    if (grid != nullptr) {
      const auto f = grid->feature(flat);
      e.payload.assign(f.begin(), f.end());
    }
    stream.entries.push_back(std::move(e));
  }
  return stream;
}

inline TokenStream gather_tokens(const EmbeddingGrid& grid, const RetentionMask& mask,
                                 PositionMode mode) {
  return gather_tokens(&grid, mask, mode);
}

inline TokenStream gather_tokens(const RetentionMask& mask, PositionMode mode) {
  return gather_tokens(nullptr, mask, mode);
}

struct RetentionReport {
  std::size_t total_sites = 0;
  std::size_t retained = 0;
  double retained_fraction = 0.0;
  std::vector<std::size_t> per_frame;
};

inline RetentionReport stream_stats(const RetentionMask& mask) {
  mask.validate();
  RetentionReport r;
  r.total_sites = mask.shape.sites();
  r.per_frame.assign(mask.shape.frames, 0);
  const std::size_t per = mask.shape.sites_per_frame();
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i]) {
      ++r.retained;
      ++r.per_frame[i / per];
    }
  r.retained_fraction =
      r.total_sites == 0 ? 0.0
                         : static_cast<double>(r.retained) / static_cast<double>(r.total_sites);
  return r;
}

/// Sites on which two masks of the same grid disagree.
inline std::size_t disagreement_count(const RetentionMask& a, const RetentionMask& b) {
  require(a.shape == b.shape, "cannot compare masks of different grids");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) n += (a.bits[i] != 0) != (b.bits[i] != 0);
  return n;
}

/// Sites kept by both masks.
inline std::size_t overlap_count(const RetentionMask& a, const RetentionMask& b) {
  require(a.shape == b.shape, "cannot compare masks of different grids");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) n += a.bits[i] && b.bits[i];
  return n;
}

}  // namespace evs
