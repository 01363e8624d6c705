#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "evs/detail/parallel.hpp"
#include "evs/diff_field.hpp"
#include "evs/tensor.hpp"

namespace evs {

/// Cosine similarity of two feature vectors in double precision. A zero-norm
/// vector has similarity 0 with anything.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical vectors give
  // exactly 1.
  return dot / std::sqrt(na * nb);
}

/// 1 - cos(e[t], e[t-1]) per site for t = 1..T-1, clamped to [0, 2].
inline DiffField compute_embedding_diffs(const EmbeddingGrid& grid, unsigned threads = 1) {
  DiffField diffs;
  diffs.grid = grid.shape();
  const std::size_t per_frame = diffs.grid.sites_per_frame();
  diffs.values.assign(diffs.grid.prunable_sites(), 0.0);
  detail::parallel_for(diffs.diff_frames(), threads, [&](std::size_t k) {
    for (std::size_t i = 0; i < per_frame; ++i) {
      const std::size_t cur = (k + 1) * per_frame + i;
      const double d =
          1.0 - cosine_similarity(grid.feature(cur), grid.feature(cur - per_frame));
      diffs.values[k * per_frame + i] = std::clamp(d, 0.0, 2.0);
    }
  });
  return diffs;
}

/// Embedding-space EVS mask; same thresholding as the RGB path.
inline RetentionMask build_mask_embedding(const EmbeddingGrid& grid, PruningConfig config,
                                          unsigned threads = 1) {
  config.selector = SelectorTag::embedding;
  return build_mask(compute_embedding_diffs(grid, threads), config);
}

}  // namespace evs
