#pragma once

#include <stdexcept>
#include <string>

namespace rfekit {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  parse_error,
  format_unsupported,
  truncated,
  version_mismatch,
  hash_mismatch,
  not_found,
  duplicate_key,
  empty_input,
  missing_fields,
  io_error,
  numeric_error,
};

const char* errc_name(Errc code) noexcept;

// Every recoverable failure in the library surfaces as an Error carrying a
// machine-checkable code plus a human diagnostic.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rfekit
