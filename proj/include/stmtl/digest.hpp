#pragma once

#include <cstdint>
#include <string>

namespace stmtl {

// FNV-1a 64-bit content digests for run manifests and checkpoint guards.
inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex_digest(std::uint64_t h);
std::string file_digest(const std::string& path);  // hex FNV-1a of file bytes

}  // namespace stmtl
