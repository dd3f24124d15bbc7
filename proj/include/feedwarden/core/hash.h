#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace feedwarden {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. The seed replaces the offset basis, so seed=kFnvOffsetBasis is
// the textbook function.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = kFnvOffsetBasis) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// Lowercase hex MD5 digest.
std::string md5_hex(std::string_view bytes);

}  // namespace feedwarden
