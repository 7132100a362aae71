#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mdg {

// All randomness in the pipeline flows from one master seed. Each stage
// draws from its own substream, keyed by name, so re-running a stage in
// isolation reproduces the exact sequence it saw inside a full run.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::string_view stage,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a64(stage)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stage,
                                std::uint64_t index = 0) {
  return std::mt19937_64(substream_seed(master, stage, index));
}

// Uniform double in [lo, hi). Hand-rolled from raw 64-bit draws so that
// streams do not depend on the standard library's distribution internals.
inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  const double u = (rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline double gaussian(std::mt19937_64& rng, double mean = 0.0, double stddev = 1.0) {
  // Marsaglia polar method, one sample per call.
  double u, v, s;
  do {
    u = uniform(rng, -1.0, 1.0);
    v = uniform(rng, -1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return mean + stddev * u * std::sqrt(-2.0 * std::log(s) / s);
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  // Rejection sampling for an unbiased draw in [0, n).
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

}  // namespace mdg
