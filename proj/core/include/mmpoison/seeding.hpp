#pragma once

#include <cstdint>
#include <string_view>

namespace mmpoison {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// One splitmix64 finalisation round.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable sub-seed for a named stream: splitmix64(seed ^ fnv1a64(tag)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

}  // namespace mmpoison
