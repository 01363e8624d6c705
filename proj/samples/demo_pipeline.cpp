// Builds a small synthetic clip (static textured background, one moving
// square), writes it plus a matching embedding file, then runs the library
// path end to end: RGB mask, embedding mask, gather, retention stats.
//
//   evs_demo [out_dir]

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <vector>

#include "evs/evs.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? argv[1] : "evs_demo";
  fs::create_directories(out_dir);

  constexpr std::size_t frames = 8, height = 128, width = 128;
  constexpr int encoder_patch = 16, downsample = 1;
  std::vector<std::uint8_t> pixels(frames * 3 * height * width);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
          const bool square = y >= 48 && y < 64 && x >= 8 + 14 * t && x < 24 + 14 * t;
          const auto bg = static_cast<std::uint8_t>((x * 3 + y * 5 + c * 40) % 200);
          pixels[((t * 3 + c) * height + y) * width + x] = square ? 250 : bg;
        }
  const evs::VideoClip clip(frames, 3, height, width, std::move(pixels));
  const evs::PatchGeometry geom(width, height, encoder_patch, downsample);

  // Stand-in encoder: per-patch channel means plus a fixed positional code.
  const evs::GridShape grid = geom.grid(frames);
  constexpr std::size_t channels = 8;
  std::vector<float> features(grid.sites() * channels);
  for (std::size_t i = 0; i < grid.sites(); ++i) {
    const evs::TokenSite s = evs::site_at(i, grid);
    const evs::PatchRect r = geom.patch_rect(static_cast<int>(s.y), static_cast<int>(s.x));
    for (std::size_t c = 0; c < 3; ++c) {
      double sum = 0;
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) sum += clip.at(s.t, c, y, x);
      features[i * channels + c] = static_cast<float>(sum / r.pixels() / 255.0);
    }
    for (std::size_t c = 3; c < channels; ++c)
      features[i * channels + c] = static_cast<float>(0.1 * ((s.y * 7 + s.x * 3 + c) % 5));
  }
  const evs::EmbeddingGrid embeddings(grid, channels, std::move(features));

  evs::io::write_clip(clip, out_dir / "clip.tbin");
  evs::io::write_embeddings(embeddings, out_dir / "embeddings.tbin");

  evs::PruningConfig config;
  config.pruning_rate = 0.75;
  const auto rgb_mask = evs::build_mask_rgb(clip, geom, config);
  const auto emb_mask = evs::build_mask_embedding(embeddings, config);
  evs::io::write_mask(rgb_mask, out_dir / "rgb.evsm");

  const auto stream = evs::gather_tokens(embeddings, emb_mask, evs::PositionMode::preserving);
  evs::io::write_tokens(stream, out_dir / "tokens.evst");

  const auto stats = evs::stream_stats(rgb_mask);
  std::cout << "grid " << evs::to_string(grid) << ", kept " << stats.retained << " of "
            << stats.total_sites << " tokens (rgb selector)\nper-frame:";
  for (auto n : stats.per_frame) std::cout << ' ' << n;
  std::cout << "\nrgb vs embedding disagreement: "
            << evs::disagreement_count(rgb_mask, emb_mask) << " sites\n"
            << "gathered " << stream.entries.size() << " tokens, last position id "
            << stream.entries.back().position_id << "\n"
            << "files written to " << out_dir.string() << "\n";
}
