#pragma once

#include <cstdint>

// Counter-based deterministic random numbers.
//
// Every draw is a pure function of a structured key, so any process that
// can name a draw (seed, stream, neuron, iteration, draw index) computes
// the same value with no shared state. This is what makes map tasks
// schedule-independent and lets the single-process reference simulator
// reproduce a distributed run bit for bit.
//
// Construction (all arithmetic in uint64, wrapping):
//   h = mix64(seed + GOLDEN)
//   for field in (stream, neuron_id, iter, draw):
//     h = mix64(h + GOLDEN + field)
//   u01 = (h >> 11) * 2^-53          // top 53 bits -> double in [0, 1)
// where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer.
// Any re-implementation following this recipe matches bit for bit.

namespace spikemr::rng {

// Independent draw families. Build covers population construction
// (cell parameters and synaptic weights); Thalamic covers the per-step
// input current.
enum class Stream : std::uint64_t {
  Build = 0,
  Thalamic = 1,
};

struct RandomKey {
  std::uint64_t seed = 0;
  Stream stream = Stream::Build;
  std::uint64_t neuron_id = 0;
  std::uint64_t iter = 0;
  std::uint64_t draw = 0;
};

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t key_hash(const RandomKey& key) noexcept {
  std::uint64_t h = mix64(key.seed + kGolden);
  h = mix64(h + kGolden + static_cast<std::uint64_t>(key.stream));
  h = mix64(h + kGolden + key.neuron_id);
  h = mix64(h + kGolden + key.iter);
  h = mix64(h + kGolden + key.draw);
  return h;
}

// Uniform double in [0, 1): the hash's top 53 bits scaled by 2^-53.
constexpr double uniform01(const RandomKey& key) noexcept {
  return static_cast<double>(key_hash(key) >> 11) * 0x1.0p-53;
}

}  // namespace spikemr::rng
