#pragma once

#include <cstdint>
#include <string_view>

namespace dex {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

/// 64-bit FNV-1a, chainable through `h`.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace dex
