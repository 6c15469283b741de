#include "rlplan/rng.hpp"

#include "rlplan/error.hpp"

namespace rlplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
  return splitmix64(splitmix64(root) ^ fnv1a(name));
}

std::uint64_t substream_seed(std::uint64_t root, std::string_view name, std::uint64_t index) {
  return splitmix64(substream_seed(root, name) + splitmix64(index + 1));
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::degenerate_input: return "degenerate input";
    case ErrorCode::out_of_corridor: return "out of corridor";
    case ErrorCode::singular_projection: return "singular projection";
    case ErrorCode::invalid_duration: return "invalid duration";
    case ErrorCode::non_divisible_step: return "non-divisible step";
    case ErrorCode::unknown_scenario: return "unknown scenario";
    case ErrorCode::precondition: return "precondition violation";
    case ErrorCode::time_mismatch: return "time mismatch";
    case ErrorCode::not_psd: return "matrix not positive semidefinite";
    case ErrorCode::invalid_confidence: return "invalid confidence";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::cache_mismatch: return "cache mismatch";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::missing_context: return "missing prediction context";
    case ErrorCode::missing_covariance: return "missing covariance";
    case ErrorCode::undersized_buffer: return "undersized buffer";
    case ErrorCode::invalid_config: return "invalid config";
    case ErrorCode::corrupt_checkpoint: return "corrupt checkpoint";
    case ErrorCode::malformed_csv: return "malformed csv";
    case ErrorCode::io: return "io error";
  }
  return "unknown error";
}

}  // namespace rlplan
