#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vectorpose {

using Rng = std::mt19937_64;

/// Named RNG streams. A stream is derived from (global seed, stream tag,
/// index), so a worker can rebuild the exact draw for sample `index` without
/// touching any shared generator.
enum class StreamTag : std::uint64_t {
  kPretrainSample = 1,
  kFinetuneSample = 2,
  kPhantom = 3,
  kNetworkInit = 4,
  kSplit = 5,
  kInspect = 6,
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  const auto t = static_cast<std::uint64_t>(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Uniform draw in [lo, hi]; kept as a free function so every module draws
/// reals the same way.
inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

/// Serializes the full engine state (portable text form of the standard library).
std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace vectorpose
