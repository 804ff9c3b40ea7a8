#pragma once

#include <stdexcept>
#include <string>

namespace aigw {

// Hard-failure codes. Flow-control outcomes (admission rejects, route
// misses) are plain values, not exceptions; these are for contract
// violations and broken storage.
enum class Errc {
  arithmetic_overflow,
  unsupported_record_type,
  encoding_corrupt,
  duplicate_id,
  dangling_reference,
  invalid_kind_fields,
  invalid_profile,
  invalid_argument,
  storage_corrupt,
  unknown_reservation,
  over_commit,
  inconsistent_stream,
  mixed_tenant,
  ambiguous_plan,
  empty_sample,
  upstream_error,
  upstream_timeout,
  config_invalid,
  bind_failure,
  gateway_unavailable,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace aigw
