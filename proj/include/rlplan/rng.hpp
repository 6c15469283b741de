#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rlplan {

using Rng = std::mt19937_64;

/// Seed for a named substream of a root seed. Streams with different names
/// are statistically independent, so perturbing one (e.g. exploration) never
/// shifts the draws of another (e.g. spawning).
std::uint64_t substream_seed(std::uint64_t root, std::string_view name);
std::uint64_t substream_seed(std::uint64_t root, std::string_view name, std::uint64_t index);

inline Rng make_stream(std::uint64_t root, std::string_view name) {
  return Rng(substream_seed(root, name));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace rlplan
