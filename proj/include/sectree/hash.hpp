#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sectree {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// 64-bit FNV-1a, seeded by folding the seed into the offset basis.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

} // namespace sectree
