// Copyright 2026 The slimdex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace slimdex {

inline constexpr std::uint16_t kHalfMaxFiniteBits = 0x7BFF;  // 65504
inline constexpr float kHalfMaxFinite = 65504.0F;

/// IEEE-754 binary32 -> binary16, round-to-nearest-even. Magnitudes beyond
/// the half range saturate to +-65504 instead of overflowing to infinity.
inline std::uint16_t float_to_half_bits(float value) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((x >> 16) & 0x8000U);
  const std::uint32_t abs = x & 0x7FFFFFFFU;

  if (abs > 0x7F800000U) return static_cast<std::uint16_t>(sign | 0x7E00U);  // NaN
  if (std::bit_cast<float>(abs) >= kHalfMaxFinite) {
    return static_cast<std::uint16_t>(sign | kHalfMaxFiniteBits);
  }

  const int exp = static_cast<int>(abs >> 23) - 127;
  const std::uint32_t frac = abs & 0x7FFFFFU;

  if (exp >= -14) {
    std::uint32_t h = (static_cast<std::uint32_t>(exp + 15) << 10) | (frac >> 13);
    const std::uint32_t rem = frac & 0x1FFFU;
    if (rem > 0x1000U || (rem == 0x1000U && (h & 1U))) ++h;
    return static_cast<std::uint16_t>(sign | h);
  }

  // Subnormal half: count units of 2^-24.
  if ((abs >> 23) == 0) return sign;  // float subnormal or zero: far below half range
  const std::uint32_t mant = frac | 0x800000U;
  const int shift = -(exp + 1);
  if (shift > 25) return sign;
  std::uint32_t h = mant >> shift;
  const std::uint32_t rem = mant & ((1U << shift) - 1U);
  const std::uint32_t halfway = 1U << (shift - 1);
  if (rem > halfway || (rem == halfway && (h & 1U))) ++h;
  return static_cast<std::uint16_t>(sign | h);
}

inline float half_bits_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000U) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1FU;
  std::uint32_t frac = h & 0x3FFU;

  if (exp == 0x1F) return std::bit_cast<float>(sign | 0x7F800000U | (frac << 13));
  if (exp != 0) {
    return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (frac << 13));
  }
  if (frac == 0) return std::bit_cast<float>(sign);
  // Normalize the subnormal.
  int e = -14;
  while ((frac & 0x400U) == 0) {
    frac <<= 1;
    --e;
  }
  frac &= 0x3FFU;
  return std::bit_cast<float>(sign | (static_cast<std::uint32_t>(e + 127) << 23) | (frac << 13));
}

/// Half-precision copy of `values`; exactly 2 bytes per element.
inline std::vector<std::uint16_t> cast_f16(std::span<const float> values) {
  std::vector<std::uint16_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = float_to_half_bits(values[i]);
  return out;
}

}  // namespace slimdex
