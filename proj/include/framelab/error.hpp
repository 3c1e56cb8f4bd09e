#pragma once

#include <stdexcept>
#include <string>

namespace framelab {

enum class ErrorCode {
  dimension_mismatch,
  not_hermitian,
  not_positive_definite,
  not_self_adjoint,
  not_unit_vector,
  not_normalized_pair,
  not_a_frame,
  not_invertible,
  ill_conditioned,
  zero_row,
  bad_measure,
  bad_weight,
  bad_argument,
  io_failure,
  parse_failure,
};

const char* error_code_name(ErrorCode c);

// Single exception type for the whole library. `code()` gives the structured
// category, what() carries the human-readable context (offending index,
// eigenvalue, dimension pair, ...).
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace framelab
