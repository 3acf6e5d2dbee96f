#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attend {

enum class Errc {
  schema,
  row,
  domain,
  conflict,
  not_found,
  malformed_uid,
  ambiguity,
  calibration,
  protocol,
  framing,
  encode,
  parse,
  reference,
  validation,
  wrong_time,
  state,
  io,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace attend
