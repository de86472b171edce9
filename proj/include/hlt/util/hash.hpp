#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace hlt::util {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// FNV-1a over raw bytes; chain calls by passing the previous result as `seed`.
inline std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = kFnvOffset) noexcept {
    std::uint64_t h = seed;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a64_values(std::span<const T> values, std::uint64_t seed = kFnvOffset) noexcept {
    return fnv1a64(std::as_bytes(values), seed);
}

inline std::uint64_t fnv1a64_string(std::string_view s, std::uint64_t seed = kFnvOffset) noexcept {
    return fnv1a64(std::as_bytes(std::span<const char>(s.data(), s.size())), seed);
}

}  // namespace hlt::util
