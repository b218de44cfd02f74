#pragma once

#include <cstdint>
#include <random>

namespace qudqn {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named sub-streams so that e.g. demands and physics draws never share state.
enum class Stream : std::uint64_t {
    topology = 1,
    demands = 2,
    physics = 3,
    policy = 4,
    init = 5,
    replay = 6,
    explore = 7,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(mix_seed(base) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

inline Rng make_rng(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
    return Rng{derive_seed(base, stream, index)};
}

// One uniform draw in [0,1); Bernoulli trials compare against it so that every
// trial consumes exactly one engine output.
inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace qudqn
