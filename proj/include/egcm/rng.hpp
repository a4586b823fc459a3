#pragma once

#include <cstdint>
#include <random>

namespace egcm {

using Rng = std::mt19937_64;

// Independent streams for the stochastic parts of one training step. Keeping
// them apart means switching one component off never shifts the draws of
// another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kMixup = 2,
  kContrastive = 3,
  kDropout = 4,
  kSampling = 5,
  kSplit = 6,
  kRemap = 7,
  kSynth = 8,
};

// SplitMix64 finalizer; used to derive well-separated seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t step = 0) {
  const auto s = mix_seed(mix_seed(seed) ^ mix_seed(static_cast<std::uint64_t>(stream) << 32 | 0x5eed) ^
                          mix_seed(step + 0x1234567ULL));
  return Rng{s};
}

}  // namespace egcm
