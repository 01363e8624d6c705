#pragma once

// Token-reduction baselines compared against EVS at a matched budget:
// random pruning, uniform frame subsampling and a greedy token-merging
// stand-in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "evs/detail/rounding.hpp"
#include "evs/diff_field.hpp"
#include "evs/error.hpp"
#include "evs/random.hpp"
#include "evs/tensor.hpp"

namespace evs {

enum class BaselineMethod { random, subsample, merge };

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::random;
  double pruning_rate = 0.75;
  std::uint64_t seed = 0;

  void validate() const {
    require(pruning_rate >= 0.0 && pruning_rate < 1.0, "pruning rate must lie in [0, 1)");
  }
};

/// Keeps frame 0 plus round((1-q) * prunable) sites drawn uniformly without
/// replacement.
inline RetentionMask random_mask(const GridShape& grid, double q, std::uint64_t seed) {
  require(grid.frames >= 1, "random mask needs at least one frame");
  require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
  RetentionMask mask = RetentionMask::all_ones(grid, q, SelectorTag::random);
  const std::size_t anchor = grid.sites_per_frame();
  const std::size_t n = grid.prunable_sites();
  const std::size_t keep = detail::kept_count(q, n);
  std::fill(mask.bits.begin() + static_cast<std::ptrdiff_t>(anchor), mask.bits.end(),
            std::uint8_t{0});

  // partial Fisher-Yates: the first `keep` slots end up a uniform sample
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Engine eng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + uniform_below(eng, n - i);
    std::swap(pool[i], pool[j]);
    mask.bits[anchor + pool[i]] = 1;
  }
  return mask;
}

inline RetentionMask random_mask(const PatchGeometry& geom, std::size_t frames,
                                 const BaselineConfig& config) {
  config.validate();
  return random_mask(geom.grid(frames), config.pruning_rate, config.seed);
}

/// Frames kept by uniform-stride subsampling: ceil((1-q)*T) frames at
/// indices round(i*(T-1)/(k-1)), always including frame 0.
inline std::vector<std::size_t> subsample_frames(std::size_t frames, double q) {
  require(frames >= 1, "subsampling needs at least one frame");
  require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
  const std::size_t k =
      std::clamp<std::size_t>(detail::ceil_count((1.0 - q) * static_cast<double>(frames)), 1,
                              frames);
  if (k == 1) return {0};
  std::vector<std::size_t> kept(k);
  for (std::size_t i = 0; i < k; ++i)  // integer round-half-up of i*(T-1)/(k-1)
    kept[i] = (2 * i * (frames - 1) + (k - 1)) / (2 * (k - 1));
  return kept;
}

inline RetentionMask subsample_mask(const GridShape& grid, double q) {
  RetentionMask mask{grid, std::vector<std::uint8_t>(grid.sites(), 0), q,
                     SelectorTag::subsample};
  const std::size_t per = grid.sites_per_frame();
  for (std::size_t t : subsample_frames(grid.frames, q))
    std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(t * per), per,
                std::uint8_t{1});
  return mask;
}

inline RetentionMask subsample_mask(const PatchGeometry& geom, std::size_t frames, double q) {
  return subsample_mask(geom.grid(frames), q);
}

struct MergeResult {
  TokenStream stream;
  std::vector<std::uint32_t> multiplicity;  // source tokens folded into each entry
};

namespace detail {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace detail

/// Greedy bipartite merging down to exactly `target` tokens.
///
/// Each round splits the current tokens (canonical order) alternately into A
/// and B, pairs every A token with its most cosine-similar B token (ties to
/// the earlier B), and folds the r most similar A tokens into their partners,
/// r = min(|A|, tokens still to remove). A merged token carries the
/// multiplicity-weighted mean payload and the earliest site of its group.
inline MergeResult merge_tokens_to(const EmbeddingGrid& grid, std::size_t target,
                                   PositionMode mode = PositionMode::preserving) {
  const std::size_t n = grid.shape().sites();
  require(n >= 2, "token merging needs at least two tokens");
  require(target >= 1, "merge target must keep at least one token");
  require(target <= n, "merge target exceeds the token count");
  const std::size_t channels = grid.channels();

  struct Token {
    std::size_t flat;
    std::uint32_t weight;
    std::vector<double> sum;  // weighted sum; mean = sum / weight
  };
  std::vector<Token> tokens(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = grid.feature(i);
    tokens[i] = {i, 1, std::vector<double>(f.begin(), f.end())};
  }

  while (tokens.size() > target) {
    std::vector<std::size_t> a_idx, b_idx;
    for (std::size_t i = 0; i < tokens.size(); ++i) (i % 2 == 0 ? a_idx : b_idx).push_back(i);

    struct Match {
      std::size_t a;
      std::size_t b;
      double similarity;
    };
    std::vector<Match> matches;
    matches.reserve(a_idx.size());
    for (std::size_t a : a_idx) {
      Match best{a, b_idx.front(), -2.0};
      for (std::size_t b : b_idx) {
        const double s = detail::cosine(tokens[a].sum, tokens[b].sum);
        if (s > best.similarity) best = {a, b, s};
      }
      matches.push_back(best);
    }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& x, const Match& y) {
      return x.similarity > y.similarity;
    });
    const std::size_t r = std::min(matches.size(), tokens.size() - target);

    std::vector<bool> removed(tokens.size(), false);
    for (std::size_t k = 0; k < r; ++k) {
      Token& src = tokens[matches[k].a];
      Token& dst = tokens[matches[k].b];
      for (std::size_t c = 0; c < channels; ++c) dst.sum[c] += src.sum[c];
      dst.weight += src.weight;
      dst.flat = std::min(dst.flat, src.flat);
      removed[matches[k].a] = true;
    }
    std::vector<Token> next;
    next.reserve(tokens.size() - r);
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (!removed[i]) next.push_back(std::move(tokens[i]));
    std::sort(next.begin(), next.end(),
              [](const Token& x, const Token& y) { return x.flat < y.flat; });
    tokens = std::move(next);
  }

  MergeResult out;
  out.stream.shape = grid.shape();
  out.stream.mode = mode;
  out.stream.payload_channels = channels;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    TokenEntry e;
    e.site = site_at(tokens[k].flat, grid.shape());
    e.position_id =
        static_cast<std::uint32_t>(mode == PositionMode::preserving ? tokens[k].flat : k);
    e.payload.resize(channels);
    for (std::size_t c = 0; c < channels; ++c)
      e.payload[c] = static_cast<float>(tokens[k].sum[c] / tokens[k].weight);
    out.stream.entries.push_back(std::move(e));
    out.multiplicity.push_back(tokens[k].weight);
  }
  return out;
}

/// Merges down to round((1-q) * T*H'*W') tokens.
inline MergeResult merge_tokens(const EmbeddingGrid& grid, double q,
                                PositionMode mode = PositionMode::preserving) {
  require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
  const std::size_t target = detail::kept_count(q, grid.shape().sites());
  require(target >= 1, "merge target must keep at least one token");
  return merge_tokens_to(grid, target, mode);
}

}  // namespace evs
