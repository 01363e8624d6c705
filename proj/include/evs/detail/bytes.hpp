#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace evs::detail {

// Little-endian encode/decode helpers; payloads are always little-endian on
// disk regardless of host order.
template <class U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <class U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_le(out, std::bit_cast<std::uint32_t>(f));
}
inline float get_f32(const std::uint8_t* p) {
  return std::bit_cast<float>(get_le<std::uint32_t>(p));
}
inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  put_le(out, std::bit_cast<std::uint64_t>(d));
}
inline double get_f64(const std::uint8_t* p) {
  return std::bit_cast<double>(get_le<std::uint64_t>(p));
}

inline void append_f32s(std::vector<std::uint8_t>& out, std::span<const float> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto old = out.size();
    out.resize(old + xs.size() * 4);
    if (!xs.empty()) std::memcpy(out.data() + old, xs.data(), xs.size() * 4);
  } else {
    for (float f : xs) put_f32(out, f);
  }
}

inline void read_f32s(const std::uint8_t* p, std::span<float> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!xs.empty()) std::memcpy(xs.data(), p, xs.size() * 4);
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = get_f32(p + 4 * i);
  }
}

}  // namespace evs::detail
