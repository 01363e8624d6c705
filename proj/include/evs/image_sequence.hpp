#pragma once

// Binary PPM (P6) / PGM (P5) frames. A directory of frames sorted by file
// name becomes a u8 VideoClip; grayscale frames are replicated to 3 channels.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evs/error.hpp"
#include "evs/tensor.hpp"
#include "evs/tensor_io.hpp"

namespace evs::io {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

namespace detail_pnm {

inline std::size_t skip_space_and_comments(const std::vector<std::uint8_t>& b,
                                           std::size_t i) {
  while (i < b.size()) {
    if (b[i] == '#') {
      while (i < b.size() && b[i] != '\n') ++i;
    } else if (std::isspace(b[i])) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

inline std::size_t read_uint(const std::vector<std::uint8_t>& b, std::size_t& i,
                             const std::string& what) {
  i = skip_space_and_comments(b, i);
  if (i >= b.size() || !std::isdigit(b[i]))
    fail(ErrorCode::corrupt_file, "expected " + what + " in image header");
  std::size_t v = 0;
  while (i < b.size() && std::isdigit(b[i])) {
    v = v * 10 + (b[i++] - '0');
    if (v > (1u << 24)) fail(ErrorCode::corrupt_file, what + " too large");
  }
  return v;
}

}  // namespace detail_pnm

inline RgbImage decode_pnm(const std::vector<std::uint8_t>& b) {
  if (b.size() < 2 || b[0] != 'P' || (b[1] != '6' && b[1] != '5'))
    fail(ErrorCode::unsupported_format, "only binary PPM (P6) and PGM (P5) are accepted");
  const bool color = b[1] == '6';
  std::size_t i = 2;
  RgbImage img;
  img.width = detail_pnm::read_uint(b, i, "width");
  img.height = detail_pnm::read_uint(b, i, "height");
  const std::size_t maxval = detail_pnm::read_uint(b, i, "maxval");
  if (img.width == 0 || img.height == 0)
    fail(ErrorCode::corrupt_file, "image has zero extent");
  if (maxval == 0 || maxval > 255)
    fail(ErrorCode::unsupported_format, "maxval " + std::to_string(maxval) +
                                            " (only 8-bit samples supported)");
  if (i >= b.size() || !std::isspace(b[i]))
    fail(ErrorCode::corrupt_file, "missing separator before raster");
  ++i;
  const std::size_t n = img.width * img.height;
  const std::size_t raster = color ? 3 * n : n;
  if (b.size() - i < raster)
    fail(ErrorCode::corrupt_file, "raster shorter than declared size");
  img.rgb.resize(3 * n);
  if (color) {
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(i), 3 * n, img.rgb.begin());
  } else {
    for (std::size_t k = 0; k < n; ++k)
      img.rgb[3 * k] = img.rgb[3 * k + 1] = img.rgb[3 * k + 2] = b[i + k];
  }
  return img;
}

inline RgbImage read_pnm(const std::filesystem::path& path) {
  return decode_pnm(read_file(path));
}

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string head = "P6\n" + std::to_string(img.width) + " " +
                           std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

inline void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ppm(img));
}

inline bool is_pnm_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".ppm" || ext == ".pgm";
}

/// Loads every .ppm/.pgm in `dir`, sorted by file name, as one clip.
inline VideoClip read_image_sequence(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && is_pnm_path(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  if (files.empty())
    fail(ErrorCode::invalid_argument, "no PPM/PGM frames in " + dir.string());

  std::vector<std::uint8_t> data;
  std::size_t width = 0, height = 0;
  for (const auto& f : files) {
    const RgbImage img = read_pnm(f);
    if (data.empty()) {
      width = img.width;
      height = img.height;
    } else if (img.width != width || img.height != height) {
      fail(ErrorCode::invalid_argument,
           "frame " + f.filename().string() + " differs in size from the first frame");
    }
    // interleaved RGB -> planar CHW
    const std::size_t n = width * height;
    const std::size_t base = data.size();
    data.resize(base + 3 * n);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < n; ++k) data[base + c * n + k] = img.rgb[3 * k + c];
  }
  return {files.size(), 3, height, width, std::move(data)};
}

/// Frame t of a clip as interleaved 8-bit RGB. f32 samples are rounded and
/// clamped to [0, 255]; single-channel clips are replicated.
inline RgbImage frame_to_rgb(const VideoClip& clip, std::size_t t) {
  RgbImage img{clip.width(), clip.height(),
               std::vector<std::uint8_t>(3 * clip.width() * clip.height())};
  for (std::size_t y = 0; y < clip.height(); ++y)
    for (std::size_t x = 0; x < clip.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src_c = std::min(c, clip.channels() - 1);
        const double v = clip.at(t, src_c, y, x);
        const double r = std::clamp(std::round(v), 0.0, 255.0);
        img.rgb[3 * (y * clip.width() + x) + c] = static_cast<std::uint8_t>(r);
      }
  return img;
}

}  // namespace evs::io
