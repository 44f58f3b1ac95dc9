#pragma once

#include <cstdint>
#include <random>

namespace rhd {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the index-th independent stream under a master seed:
// mix(master XOR mix(index + 1)). Used for replicates, null datasets and
// scenario parts, so results never depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(master ^ mix_seed(index + 1));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t sub) noexcept {
  return derive_seed(derive_seed(master, index), sub);
}

}  // namespace rhd
