#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace argpipe {

// FNV-1a, 64 bit. Used for content hashes in stage manifests and for
// deriving sub-seeds; std::hash is implementation-defined so it is not
// suitable for anything that ends up in a file.
constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t value);

// Content hash of a file, as 16 hex chars. Throws IoError if unreadable.
std::string hash_file(const std::string& path);

// Stable seed derivation: mixes a base seed with a tag string.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace argpipe
