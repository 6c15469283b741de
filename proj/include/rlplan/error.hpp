#pragma once

#include <stdexcept>
#include <string>

namespace rlplan {

enum class ErrorCode {
  degenerate_input,
  out_of_corridor,
  singular_projection,
  invalid_duration,
  non_divisible_step,
  unknown_scenario,
  precondition,
  time_mismatch,
  not_psd,
  invalid_confidence,
  dimension_mismatch,
  cache_mismatch,
  shape_mismatch,
  missing_context,
  missing_covariance,
  undersized_buffer,
  invalid_config,
  corrupt_checkpoint,
  malformed_csv,
  io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rlplan
