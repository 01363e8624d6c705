#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evs/selector_embedding.hpp"
#include "evs/selector_rgb.hpp"
#include "oracles.hpp"

namespace evs {
namespace {

PruningConfig config(double q, ThresholdMode mode = ThresholdMode::exact_budget) {
  PruningConfig c;
  c.pruning_rate = q;
  c.mode = mode;
  return c;
}

EmbeddingGrid repeated_frames(std::mt19937_64& rng, GridShape shape, std::size_t channels) {
  const EmbeddingGrid first = oracle::random_grid(rng, {1, shape.height, shape.width}, channels);
  std::vector<float> data;
  for (std::size_t t = 0; t < shape.frames; ++t)
    data.insert(data.end(), first.data().begin(), first.data().end());
  return {shape, channels, data};
}

TEST(EmbeddingDiffs, IdenticalVectorsGiveExactlyZero) {
  std::mt19937_64 rng(20);
  const DiffField d = compute_embedding_diffs(repeated_frames(rng, {3, 2, 2}, 8));
  ASSERT_EQ(d.values.size(), 8u);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(EmbeddingDiffs, AntipodalVectorGivesTwo) {
  std::mt19937_64 rng(21);
  const EmbeddingGrid base = repeated_frames(rng, {2, 2, 2}, 6);
  std::vector<float> data(base.data().begin(), base.data().end());
  const std::size_t site = 4 + 3;  // frame 1, (1, 1)
  for (std::size_t c = 0; c < 6; ++c) data[site * 6 + c] = -data[3 * 6 + c];
  const DiffField d = compute_embedding_diffs({{2, 2, 2}, 6, data});
  EXPECT_EQ(d.at(1, 1, 1), 2.0);
  EXPECT_EQ(d.at(1, 0, 0), 0.0);
}

TEST(EmbeddingDiffs, MatchesScalarOracle) {
  std::mt19937_64 rng(22);
  const EmbeddingGrid g = oracle::random_grid(rng, {2, 2, 2}, 8);
  EXPECT_EQ(compute_embedding_diffs(g).values, oracle::embedding_diffs(g));
  const EmbeddingGrid big = oracle::random_grid(rng, {7, 5, 6}, 33);
  const auto expected = oracle::embedding_diffs(big);
  EXPECT_EQ(compute_embedding_diffs(big, 1).values, expected);
  EXPECT_EQ(compute_embedding_diffs(big, 4).values, expected);
}

TEST(EmbeddingDiffs, ZeroVectorCountsAsUnrelated) {
  std::vector<float> data{1, 0, 0, 0,  //
                          0, 0, 0, 0};
  const DiffField d = compute_embedding_diffs({{2, 1, 1}, 4, data});
  EXPECT_EQ(d.values[0], 1.0);
  std::vector<float> both(8, 0.f);
  EXPECT_EQ(compute_embedding_diffs({{2, 1, 1}, 4, both}).values[0], 1.0);
}

TEST(EmbeddingDiffs, StayInsideZeroToTwo) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const auto d = compute_embedding_diffs(oracle::random_grid(rng, {4, 3, 3}, 1 + rng() % 5));
    for (double v : d.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0);
    }
  }
}

TEST(EmbeddingMask, ZeroRateKeepsEverything) {
  std::mt19937_64 rng(24);
  const auto m = build_mask_embedding(oracle::random_grid(rng, {4, 3, 3}, 4), config(0.0));
  EXPECT_EQ(m.kept_count(), 36u);
  EXPECT_EQ(m.selector, SelectorTag::embedding);
}

TEST(EmbeddingMask, RotatedSiteIsAlwaysKept) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 30; ++trial) {
    const GridShape shape{2 + rng() % 4, 2 + rng() % 3, 2 + rng() % 3};
    const EmbeddingGrid base = repeated_frames(rng, shape, 8);
    std::vector<float> data(base.data().begin(), base.data().end());
    const std::size_t t = 1 + rng() % (shape.frames - 1);
    const std::size_t site = t * shape.sites_per_frame() + rng() % shape.sites_per_frame();
    // rotate the vector in its first two coordinates by 90 degrees
    std::swap(data[site * 8], data[site * 8 + 1]);
    data[site * 8] = -data[site * 8];
    const auto m = build_mask_embedding({shape, 8, data}, config(0.5));
    EXPECT_TRUE(m.kept(site)) << "trial " << trial;
  }
}

TEST(EmbeddingMask, ConstantGridExactBudget) {
  std::vector<float> data(8 * 3, 1.0f);
  const auto m = build_mask_embedding({{2, 2, 2}, 3, data}, config(0.75));
  EXPECT_EQ(m.kept_count(), 5u);
}

TEST(EmbeddingMask, PowerOfTwoScalingIsExactlyInvariant) {
  std::mt19937_64 rng(26);
  const EmbeddingGrid g = oracle::random_grid(rng, {5, 4, 4}, 16);
  std::vector<float> scaled(g.data().begin(), g.data().end());
  for (std::size_t i = 0; i < g.shape().sites(); ++i) {
    const float s = std::ldexp(1.0f, static_cast<int>(rng() % 21) - 10);
    for (std::size_t c = 0; c < 16; ++c) scaled[i * 16 + c] *= s;
  }
  const EmbeddingGrid h(g.shape(), 16, scaled);
  EXPECT_EQ(compute_embedding_diffs(g).values, compute_embedding_diffs(h).values);
  for (auto mode : {ThresholdMode::threshold, ThresholdMode::exact_budget})
    EXPECT_EQ(build_mask_embedding(g, config(0.7, mode)).bits,
              build_mask_embedding(h, config(0.7, mode)).bits);
}

TEST(EmbeddingMask, ArbitraryPositiveScalingChangesDiffsOnlyByRounding) {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<float> scale(0.01f, 100.f);
  const EmbeddingGrid g = oracle::random_grid(rng, {4, 3, 3}, 16);
  std::vector<float> scaled(g.data().begin(), g.data().end());
  for (std::size_t i = 0; i < g.shape().sites(); ++i) {
    const float s = scale(rng);
    for (std::size_t c = 0; c < 16; ++c) scaled[i * 16 + c] *= s;
  }
  const auto a = compute_embedding_diffs(g).values;
  const auto b = compute_embedding_diffs({g.shape(), 16, scaled}).values;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(EmbeddingMask, SharesTheRgbMaskPath) {
  // an embedding grid whose diffs equal a clip's diffs gives the same mask
  std::mt19937_64 rng(28);
  const VideoClip clip = oracle::random_u8_clip(rng, 3, 8, 8);
  const DiffField rgb = compute_rgb_diffs(clip, PatchGeometry(8, 8, 4));
  const EmbeddingGrid g = oracle::random_grid(rng, {3, 2, 2}, 4);
  const DiffField emb = compute_embedding_diffs(g);
  EXPECT_EQ(rgb.grid, emb.grid);
  EXPECT_EQ(rgb.values.size(), emb.values.size());
  PruningConfig c = config(0.5);
  c.selector = SelectorTag::embedding;
  EXPECT_EQ(build_mask_embedding(g, config(0.5)), build_mask(emb, c));
}

}  // namespace
}  // namespace evs
