#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace promptsim::byte_io {

template <typename T>
T load_le(const unsigned char* p) noexcept {
  static_assert(sizeof(T) == 1 || sizeof(T) == 2 || sizeof(T) == 4 || sizeof(T) == 8);
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &value, sizeof(T));
    for (std::size_t n = 0; n < sizeof(T) / 2; ++n) std::swap(b[n], b[sizeof(T) - 1 - n]);
    std::memcpy(&value, b, sizeof(T));
  }
  return value;
}

template <typename T>
void store_le(unsigned char* p, T value) noexcept {
  std::memcpy(p, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t n = 0; n < sizeof(T) / 2; ++n) std::swap(p[n], p[sizeof(T) - 1 - n]);
  }
}

// Integer dtypes: round to nearest and saturate; NaN becomes 0.
inline float to_integral(float v, float lo, float hi) noexcept {
  if (std::isnan(v)) return 0.0f;
  return std::clamp(std::nearbyint(v), lo, hi);
}

}  // namespace promptsim::byte_io
