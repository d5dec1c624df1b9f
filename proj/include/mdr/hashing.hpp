// Stable hashing helpers.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mdr {

/// Seeded 64-bit FNV-1a followed by a splitmix64 finalizer. Output is fixed
/// across runs, compilers and platforms; the embedding and model format depend
/// on that.
constexpr std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace mdr
