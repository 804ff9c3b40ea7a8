#include "aigw/error.hpp"

namespace aigw {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::arithmetic_overflow: return "ArithmeticOverflow";
    case Errc::unsupported_record_type: return "UnsupportedRecordType";
    case Errc::encoding_corrupt: return "EncodingCorrupt";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::invalid_kind_fields: return "InvalidKindFields";
    case Errc::invalid_profile: return "InvalidProfile";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::storage_corrupt: return "StorageCorrupt";
    case Errc::unknown_reservation: return "UnknownReservation";
    case Errc::over_commit: return "OverCommit";
    case Errc::inconsistent_stream: return "InconsistentStream";
    case Errc::mixed_tenant: return "MixedTenant";
    case Errc::ambiguous_plan: return "AmbiguousPlan";
    case Errc::empty_sample: return "EmptySample";
    case Errc::upstream_error: return "UpstreamError";
    case Errc::upstream_timeout: return "UpstreamTimeout";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::bind_failure: return "BindFailure";
    case Errc::gateway_unavailable: return "GatewayUnavailable";
  }
  return "UnknownError";
}

}  // namespace aigw
