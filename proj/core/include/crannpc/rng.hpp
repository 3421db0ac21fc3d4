#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace crannpc {

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based derivation: derive_seed(master, {trial, stream}) depends only on
// its arguments, so adding trials or sweep points never shifts other streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

// Stream tags keep the different random consumers of one trial apart.
namespace stream {
inline constexpr std::uint64_t kPositions = 1;
inline constexpr std::uint64_t kShadowing = 2;
inline constexpr std::uint64_t kFading = 3;
inline constexpr std::uint64_t kMonteCarlo = 4;
inline constexpr std::uint64_t kTrial = 5;
inline constexpr std::uint64_t kGrid = 6;
}  // namespace stream

}  // namespace crannpc
