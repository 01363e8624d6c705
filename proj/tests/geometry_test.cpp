#include <gtest/gtest.h>

#include <set>

#include "evs/geometry.hpp"

namespace evs {
namespace {

TEST(EffectivePatch, IsProductOfStemPatchAndDownsample) {
  EXPECT_EQ(effective_patch_size(16, 2), 32);
  EXPECT_EQ(effective_patch_size(14, 1), 14);
  EXPECT_EQ(effective_patch_size(16, 4), 64);
}

TEST(EffectivePatch, RejectsNonPositiveInputs) {
  EXPECT_THROW(effective_patch_size(0, 2), Error);
  EXPECT_THROW(effective_patch_size(16, 0), Error);
  EXPECT_THROW(effective_patch_size(-3, 1), Error);
  try {
    effective_patch_size(16, -1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(PatchGeometry, GridUsesCeilingDivision) {
  const PatchGeometry g(512, 512, 16, 2);
  EXPECT_EQ(g.effective_patch(), 32);
  EXPECT_EQ(g.grid_width(), 16);
  EXPECT_EQ(g.grid_height(), 16);

  const PatchGeometry odd(100, 33, 16, 1);
  EXPECT_EQ(odd.grid_width(), 7);
  EXPECT_EQ(odd.grid_height(), 3);
  const PatchRect edge = odd.patch_rect(2, 6);
  EXPECT_EQ(edge.x0, 96);
  EXPECT_EQ(edge.x1, 100);
  EXPECT_EQ(edge.y0, 32);
  EXPECT_EQ(edge.y1, 33);
  EXPECT_EQ(edge.pixels(), 4);
}

TEST(PatchGeometry, GridCoversEveryPixel) {
  for (int w = 1; w < 70; w += 3)
    for (int p = 1; p < 20; p += 2) {
      const PatchGeometry g(w, w + 1, p, 1);
      EXPECT_GE(g.grid_width() * g.effective_patch(), w);
      EXPECT_LT((g.grid_width() - 1) * g.effective_patch(), w);
      EXPECT_GE(g.grid_height() * g.effective_patch(), w + 1);
    }
}

TEST(FlatIndex, KnownSites) {
  EXPECT_EQ(flat_index({0, 0, 0}, GridShape{1, 5, 7}), 0u);
  EXPECT_EQ(flat_index({1, 0, 0}, GridShape{2, 2, 2}), 4u);
  EXPECT_EQ(flat_index({1, 1, 1}, GridShape{2, 3, 3}), 13u);
  const PatchGeometry g(64, 64, 32, 1);
  EXPECT_EQ(flat_index({1, 0, 0}, g, 2), 4u);
}

TEST(FlatIndex, EnumerationIsBijective) {
  const GridShape g{2, 3, 3};
  std::set<std::size_t> seen;
  std::size_t expected = 0;
  for (std::uint32_t t = 0; t < 2; ++t)
    for (std::uint32_t y = 0; y < 3; ++y)
      for (std::uint32_t x = 0; x < 3; ++x) {
        const std::size_t i = flat_index({t, y, x}, g);
        EXPECT_EQ(i, expected++);  // row-major enumeration order
        seen.insert(i);
        EXPECT_EQ(site_at(i, g), (TokenSite{t, y, x}));
      }
  EXPECT_EQ(seen.size(), 18u);
  EXPECT_EQ(*seen.rbegin(), 17u);
}

TEST(FlatIndex, OutOfBoundsSiteIsRejected) {
  const GridShape g{2, 2, 2};
  EXPECT_THROW(flat_index({2, 0, 0}, g), Error);
  EXPECT_THROW(flat_index({0, 2, 0}, g), Error);
  EXPECT_THROW(flat_index({0, 0, 2}, g), Error);
}

}  // namespace
}  // namespace evs
