#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>

namespace qhpi {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {
constexpr std::uint64_t seed_word(std::string_view tag) noexcept { return fnv1a(tag); }
template <typename T>
    requires std::is_integral_v<T>
constexpr std::uint64_t seed_word(T v) noexcept {
    return static_cast<std::uint64_t>(v);
}
}  // namespace detail

/// Combine a master seed with any mix of integers and string tags.
template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, const Parts&... parts) noexcept {
    std::uint64_t h = mix64(seed);
    ((h = mix64(h ^ mix64(detail::seed_word(parts) + 0x632be59bd9b4e019ULL))), ...);
    return h;
}

/// Shortest-round-trip is not what we want here: every float in an output
/// file is written with exactly 17 significant digits.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

inline double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace qhpi
