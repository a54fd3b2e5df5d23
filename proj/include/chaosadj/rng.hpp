#pragma once

#include <cstdint>
#include <random>

namespace chaosadj {

using Rng = std::mt19937_64;

// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent per-task seed from a master seed and a task index.
// Every parallel worker seeds its own generator this way, so results do not
// depend on how tasks are scheduled across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x9d2c5680ull));
}

inline double uniform(Rng& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

}  // namespace chaosadj
