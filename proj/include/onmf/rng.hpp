#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace onmf {

inline constexpr const char* kGeneratorName = "mt19937_64";

// FNV-1a over the role name, folded with the master seed. All randomness in a
// run flows from the master seed through named roles, so independent parts of
// an experiment (data, init, noise, ...) draw from decorrelated streams.
inline std::uint64_t sub_seed(std::uint64_t master, std::string_view role) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : role) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    h ^= master + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view role) {
    return std::mt19937_64(sub_seed(master, role));
}

}  // namespace onmf
