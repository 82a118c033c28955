#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace livseg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a string, for turning stream names into integers.
constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the named child stream (master, name, ids...). Streams derived
/// from distinct paths are independent of evaluation order, so parallel
/// consumers see the same numbers as a serial run.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                 std::initializer_list<std::uint64_t> ids = {}) {
    std::uint64_t s = mix64(master ^ mix64(hash_name(name)));
    for (auto id : ids) s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_stream(std::uint64_t master, std::string_view name,
                       std::initializer_list<std::uint64_t> ids = {}) {
    return Rng(stream_seed(master, name, ids));
}

} // namespace livseg
