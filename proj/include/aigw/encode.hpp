#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aigw/records.hpp"
#include "aigw/sha256.hpp"

namespace aigw {

// Canonical byte encoding, schema version 1.
//
//   byte 0          schema version (0x01)
//   byte 1          record tag (see RecordTag)
//   then per field, in struct declaration order:
//       u32 big-endian payload length, payload bytes
//
// Scalar payloads: i64/u64 as 8 bytes big-endian, f64 as its IEEE-754 bit
// pattern big-endian, strings as raw UTF-8. A list field's payload is a u64
// big-endian count followed by each element as a u32-length-prefixed group
// of that element's fields. Map fields are emitted in ascending key order.
// Equal records therefore encode to identical bytes, and the encoding is
// self-delimiting.
inline constexpr uint8_t kEncodingVersion = 0x01;

enum class RecordTag : uint8_t {
  usage_record = 0x01,
  invoice = 0x02,
  share_allocation = 0x03,
  payment_receipt = 0x04,
  usage_record_list = 0x05,
};

std::vector<uint8_t> canonical_encode(const BillableRecord& record);

// Inverse of canonical_encode. Throws Errc::unsupported_record_type for an
// unknown version/tag byte and Errc::encoding_corrupt for malformed bytes.
BillableRecord canonical_decode(std::span<const uint8_t> bytes);

// SHA-256(prev_digest || payload). Genesis prev_digest is 32 zero bytes.
Digest hash_chain_digest(const Digest& prev_digest,
                         std::span<const uint8_t> payload);

inline constexpr Digest kGenesisDigest{};  // 32 zero bytes

}  // namespace aigw
