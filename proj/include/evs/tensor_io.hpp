#pragma once

// Binary container shared by every file the toolkit reads or writes:
//
//   [8 bytes magic: 7-char format tag + version byte]
//   [u32 LE header length][UTF-8 JSON header]
//   [raw little-endian payload]
//
// Header keys: kind, dtype, shape, layout, meta. Loaders reject payloads
// whose length disagrees with the header.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evs/detail/bytes.hpp"
#include "evs/error.hpp"
#include "evs/tensor.hpp"

namespace evs::io {

using json = nlohmann::json;

inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::string_view kTensorTag = "EVSTBIN";  // clip/embedding/meta
inline constexpr std::string_view kMaskTag = "EVSMASK";
inline constexpr std::string_view kTokenTag = "EVSTOKN";
inline constexpr std::size_t kTokenRecordBytes = 12;
inline constexpr std::uint32_t kMaxHeaderBytes = 1u << 20;

struct Container {
  std::string tag;
  json header;
  std::vector<std::uint8_t> payload;
};

inline std::vector<std::uint8_t> encode(const Container& c) {
  std::vector<std::uint8_t> out(c.tag.begin(), c.tag.end());
  out.push_back(kFormatVersion);
  const std::string text = c.header.dump();
  detail::put_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), c.payload.begin(), c.payload.end());
  return out;
}

inline Container decode(std::span<const std::uint8_t> bytes,
                        std::string_view expected_tag) {
  if (bytes.size() < 12)
    fail(ErrorCode::corrupt_file, "file too short for container preamble");
  const std::string tag(bytes.begin(), bytes.begin() + 7);
  if (tag != expected_tag)
    fail(ErrorCode::unsupported_format,
         "magic '" + tag + "' where '" + std::string(expected_tag) + "' expected");
  if (bytes[7] != kFormatVersion)
    fail(ErrorCode::unsupported_format,
         "container version " + std::to_string(bytes[7]));
  const auto hlen = detail::get_le<std::uint32_t>(bytes.data() + 8);
  if (hlen > kMaxHeaderBytes || 12 + std::size_t{hlen} > bytes.size())
    fail(ErrorCode::corrupt_file, "header length exceeds file");
  Container c;
  c.tag = tag;
  const auto* hbegin = reinterpret_cast<const char*>(bytes.data() + 12);
  c.header = json::parse(hbegin, hbegin + hlen, nullptr, false);
  if (c.header.is_discarded() || !c.header.is_object())
    fail(ErrorCode::corrupt_file, "header is not a JSON object");
  for (const char* key : {"kind", "dtype", "shape", "layout"})
    if (!c.header.contains(key))
      fail(ErrorCode::corrupt_file, std::string("header lacks '") + key + "'");
  if (!c.header["shape"].is_array())
    fail(ErrorCode::corrupt_file, "header shape is not an array");
  for (const auto& d : c.header["shape"])
    if (!d.is_number_unsigned())
      fail(ErrorCode::corrupt_file, "header shape holds a non-count");
  c.payload.assign(bytes.begin() + 12 + hlen, bytes.end());
  return c;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::io_error, "cannot move output into " + path.string());
  }
}

namespace detail_io {

inline std::vector<std::size_t> shape_of(const json& header, std::size_t rank) {
  const auto& s = header["shape"];
  if (s.size() != rank)
    fail(ErrorCode::corrupt_file, "expected rank-" + std::to_string(rank) + " shape");
  std::vector<std::size_t> dims;
  for (const auto& d : s) dims.push_back(d.get<std::size_t>());
  return dims;
}

inline void expect_kind(const json& header, std::string_view kind) {
  if (header["kind"] != kind)
    fail(ErrorCode::unsupported_format, "file kind '" +
                                            header["kind"].dump() + "' where '" +
                                            std::string(kind) + "' expected");
}

inline void expect_payload(const Container& c, std::size_t bytes) {
  if (c.payload.size() != bytes)
    fail(ErrorCode::corrupt_file,
         "payload holds " + std::to_string(c.payload.size()) +
             " bytes, header declares " + std::to_string(bytes));
}

inline std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > (std::size_t{1} << 40) / d)
      fail(ErrorCode::corrupt_file, "declared shape is implausibly large");
    n *= d;
  }
  return n;
}

}  // namespace detail_io

/// Reads only the JSON header's `kind` (clip, embedding, mask, tokens, meta).
inline std::string peek_kind(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 8) fail(ErrorCode::corrupt_file, "file too short");
  const std::string tag(bytes.begin(), bytes.begin() + 7);
  const std::string_view expected = tag == kMaskTag    ? kMaskTag
                                    : tag == kTokenTag ? kTokenTag
                                                       : kTensorTag;
  return decode(bytes, expected).header["kind"].get<std::string>();
}

// --- clips -----------------------------------------------------------------

inline std::vector<std::uint8_t> encode_clip(const VideoClip& clip) {
  Container c{std::string(kTensorTag),
              {{"kind", "clip"},
               {"dtype", std::string(to_string(clip.pixel_type()))},
               {"shape", {clip.frames(), clip.channels(), clip.height(), clip.width()}},
               {"layout", "TCHW"},
               {"meta", json::object()}},
              {}};
  if (clip.pixel_type() == PixelType::u8) {
    c.payload.assign(clip.u8().begin(), clip.u8().end());
  } else {
    evs::detail::append_f32s(c.payload, clip.f32());
  }
  return encode(c);
}

inline VideoClip decode_clip(std::span<const std::uint8_t> bytes) {
  const Container c = decode(bytes, kTensorTag);
  detail_io::expect_kind(c.header, "clip");
  const auto dims = detail_io::shape_of(c.header, 4);
  const std::size_t n = detail_io::product(dims);
  const std::string dtype = c.header["dtype"].is_string() ? c.header["dtype"].get<std::string>() : "";
  if (dtype == "u8") {
    detail_io::expect_payload(c, n);
    return {dims[0], dims[1], dims[2], dims[3], c.payload};
  }
  if (dtype == "f32") {
    detail_io::expect_payload(c, n * 4);
    std::vector<float> data(n);
    evs::detail::read_f32s(c.payload.data(), data);
    return {dims[0], dims[1], dims[2], dims[3], std::move(data)};
  }
  fail(ErrorCode::unsupported_format, "clip dtype '" + dtype + "'");
}

inline void write_clip(const VideoClip& clip, const std::filesystem::path& path) {
  write_file_atomic(path, encode_clip(clip));
}
inline VideoClip read_clip(const std::filesystem::path& path) {
  return decode_clip(read_file(path));
}

// --- embeddings ------------------------------------------------------------

inline std::vector<std::uint8_t> encode_embeddings(const EmbeddingGrid& grid) {
  const auto& s = grid.shape();
  Container c{std::string(kTensorTag),
              {{"kind", "embedding"},
               {"dtype", "f32"},
               {"shape", {s.frames, s.height, s.width, grid.channels()}},
               {"layout", "THWC"},
               {"meta", json::object()}},
              {}};
  evs::detail::append_f32s(c.payload, grid.data());
  return encode(c);
}

inline EmbeddingGrid decode_embeddings(std::span<const std::uint8_t> bytes) {
  const Container c = decode(bytes, kTensorTag);
  detail_io::expect_kind(c.header, "embedding");
  if (c.header["dtype"] != "f32")
    fail(ErrorCode::unsupported_format, "embedding dtype " + c.header["dtype"].dump());
  const auto dims = detail_io::shape_of(c.header, 4);
  const std::size_t n = detail_io::product(dims);
  detail_io::expect_payload(c, n * 4);
  std::vector<float> data(n);
  evs::detail::read_f32s(c.payload.data(), data);
  try {
    return {{dims[0], dims[1], dims[2]}, dims[3], std::move(data)};
  } catch (const Error& e) {
    fail(ErrorCode::corrupt_file, e.what());
  }
}

inline void write_embeddings(const EmbeddingGrid& grid, const std::filesystem::path& path) {
  write_file_atomic(path, encode_embeddings(grid));
}
inline EmbeddingGrid read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

// --- masks -----------------------------------------------------------------

// Bits are packed in canonical order, most significant bit first.
inline std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return packed;
}

inline std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed,
                                             std::size_t count) {
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i)
    bits[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
  return bits;
}

inline std::vector<std::uint8_t> encode_mask(const RetentionMask& mask) {
  mask.validate();
  Container c{std::string(kMaskTag),
              {{"kind", "mask"},
               {"dtype", "bit"},
               {"shape", {mask.shape.frames, mask.shape.height, mask.shape.width}},
               {"layout", "TYX-msb-first"},
               {"meta",
                {{"pruning_rate_used", mask.pruning_rate_used},
                 {"selector_tag", std::string(to_string(mask.selector))}}}},
              pack_bits(mask.bits)};
  return encode(c);
}

inline RetentionMask decode_mask(std::span<const std::uint8_t> bytes) {
  const Container c = decode(bytes, kMaskTag);
  detail_io::expect_kind(c.header, "mask");
  if (c.header["dtype"] != "bit")
    fail(ErrorCode::unsupported_format, "mask dtype " + c.header["dtype"].dump());
  const auto dims = detail_io::shape_of(c.header, 3);
  const std::size_t n = detail_io::product(dims);
  detail_io::expect_payload(c, (n + 7) / 8);
  if (n % 8 != 0 && (c.payload.back() & (0xFFu >> (n % 8))) != 0)
    fail(ErrorCode::corrupt_file, "nonzero padding bits after the last site");
  RetentionMask m;
  m.shape = {dims[0], dims[1], dims[2]};
  m.bits = unpack_bits(c.payload, n);
  const json meta = c.header.value("meta", json::object());
  try {
    m.pruning_rate_used = meta.value("pruning_rate_used", 0.0);
    m.selector = selector_tag_from(meta.value("selector_tag", std::string("rgb")));
  } catch (const std::exception& e) {
    fail(ErrorCode::corrupt_file, std::string("bad mask metadata: ") + e.what());
  }
  m.validate();
  return m;
}

inline void write_mask(const RetentionMask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_mask(mask));
}
inline RetentionMask read_mask(const std::filesystem::path& path) {
  return decode_mask(read_file(path));
}

// --- token streams ---------------------------------------------------------
// Fixed-width records: position_id u32, t u16, y u16, x u16, pad u16, then
// payload_channels f32 values.

inline std::vector<std::uint8_t> encode_tokens(const TokenStream& stream) {
  stream.validate();
  const auto& s = stream.shape;
  if (s.frames > 0xFFFF || s.height > 0xFFFF || s.width > 0xFFFF)
    fail(ErrorCode::invalid_argument, "grid too large for u16 site records");
  const std::size_t channels = stream.payload_channels;
  Container c{std::string(kTokenTag),
              {{"kind", "tokens"},
               {"dtype", channels == 0 ? "none" : "f32"},
               {"shape", {stream.entries.size(), channels}},
               {"layout", "pos:u32,t:u16,y:u16,x:u16,pad:u16,payload:f32[C]"},
               {"meta",
                {{"position_mode", std::string(to_string(stream.mode))},
                 {"source_token_count", stream.source_token_count()},
                 {"grid", {s.frames, s.height, s.width}}}}},
              {}};
  c.payload.reserve(stream.entries.size() * (kTokenRecordBytes + 4 * channels));
  for (const auto& e : stream.entries) {
    evs::detail::put_le(c.payload, e.position_id);
    evs::detail::put_le(c.payload, static_cast<std::uint16_t>(e.site.t));
    evs::detail::put_le(c.payload, static_cast<std::uint16_t>(e.site.y));
    evs::detail::put_le(c.payload, static_cast<std::uint16_t>(e.site.x));
    evs::detail::put_le(c.payload, std::uint16_t{0});
    evs::detail::append_f32s(c.payload, e.payload);
  }
  return encode(c);
}

inline TokenStream decode_tokens(std::span<const std::uint8_t> bytes) {
  const Container c = decode(bytes, kTokenTag);
  detail_io::expect_kind(c.header, "tokens");
  const auto dims = detail_io::shape_of(c.header, 2);
  const std::string dtype = c.header["dtype"].is_string() ? c.header["dtype"].get<std::string>() : "";
  if (!(dtype == "f32" || (dtype == "none" && dims[1] == 0)))
    fail(ErrorCode::unsupported_format, "token dtype '" + dtype + "'");
  const std::size_t record = kTokenRecordBytes + 4 * dims[1];
  detail_io::expect_payload(c, detail_io::product({dims[0], record}));

  TokenStream stream;
  try {
    const json& meta = c.header.at("meta");
    const auto grid = meta.at("grid").get<std::vector<std::size_t>>();
    if (grid.size() != 3) fail(ErrorCode::corrupt_file, "grid must have rank 3");
    stream.shape = {grid[0], grid[1], grid[2]};
    stream.mode = position_mode_from(meta.at("position_mode").get<std::string>());
    if (meta.at("source_token_count").get<std::size_t>() != stream.shape.sites())
      fail(ErrorCode::corrupt_file, "source_token_count disagrees with grid");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::corrupt_file, std::string("bad token metadata: ") + e.what());
  }
  stream.payload_channels = dims[1];
  stream.entries.resize(dims[0]);
  const std::uint8_t* p = c.payload.data();
  for (auto& e : stream.entries) {
    e.position_id = evs::detail::get_le<std::uint32_t>(p);
    e.site.t = evs::detail::get_le<std::uint16_t>(p + 4);
    e.site.y = evs::detail::get_le<std::uint16_t>(p + 6);
    e.site.x = evs::detail::get_le<std::uint16_t>(p + 8);
    if (evs::detail::get_le<std::uint16_t>(p + 10) != 0)
      fail(ErrorCode::corrupt_file, "nonzero record padding");
    e.payload.resize(dims[1]);
    evs::detail::read_f32s(p + kTokenRecordBytes, e.payload);
    p += record;
  }
  stream.validate();
  return stream;
}

inline void write_tokens(const TokenStream& stream, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tokens(stream));
}
inline TokenStream read_tokens(const std::filesystem::path& path) {
  return decode_tokens(read_file(path));
}

// --- numeric tables (kind=meta) ----------------------------------------------

struct MetaTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json meta = json::object();
};

inline std::vector<std::uint8_t> encode_table(const MetaTable& t) {
  json meta = t.meta;
  meta["columns"] = t.columns;
  Container c{std::string(kTensorTag),
              {{"kind", "meta"},
               {"dtype", "f64"},
               {"shape", {t.rows.size(), t.columns.size()}},
               {"layout", "row-major"},
               {"meta", meta}},
              {}};
  for (const auto& r : t.rows) {
    require(r.size() == t.columns.size(), "table row width mismatch");
    for (double v : r) evs::detail::put_f64(c.payload, v);
  }
  return encode(c);
}

inline MetaTable decode_table(std::span<const std::uint8_t> bytes) {
  const Container c = decode(bytes, kTensorTag);
  detail_io::expect_kind(c.header, "meta");
  if (c.header["dtype"] != "f64")
    fail(ErrorCode::unsupported_format, "table dtype " + c.header["dtype"].dump());
  const auto dims = detail_io::shape_of(c.header, 2);
  detail_io::expect_payload(c, detail_io::product(dims) * 8);
  MetaTable t;
  t.meta = c.header.value("meta", json::object());
  if (t.meta.contains("columns") && t.meta["columns"].is_array())
    t.columns = t.meta["columns"].get<std::vector<std::string>>();
  if (t.columns.size() != dims[1])
    fail(ErrorCode::corrupt_file, "column names disagree with shape");
  t.meta.erase("columns");
  const std::uint8_t* p = c.payload.data();
  for (std::size_t r = 0; r < dims[0]; ++r) {
    auto& row = t.rows.emplace_back(dims[1]);
    for (auto& v : row) {
      v = evs::detail::get_f64(p);
      p += 8;
    }
  }
  return t;
}

inline void write_table(const MetaTable& t, const std::filesystem::path& path) {
  write_file_atomic(path, encode_table(t));
}
inline MetaTable read_table(const std::filesystem::path& path) {
  return decode_table(read_file(path));
}

}  // namespace evs::io
