#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aigw {

using Digest = std::array<uint8_t, 32>;

// Incremental SHA-256 (FIPS 180-4). Self-contained; verified against the
// standard test vectors in the unit suite.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(std::span<const uint8_t> data);
  void update(std::string_view text);
  Digest finish();

  static Digest digest(std::span<const uint8_t> data);
  static Digest digest(std::string_view text);

 private:
  void process_block(const uint8_t* block);

  std::array<uint32_t, 8> state_{};
  std::array<uint8_t, 64> buffer_{};
  uint64_t total_bytes_ = 0;
  size_t buffered_ = 0;
};

// Lowercase hex. Decoding is strict: odd length or any character outside
// [0-9a-f] is rejected (uppercase deliberately refused so that a persisted
// digest has exactly one valid spelling).
std::string to_hex(std::span<const uint8_t> bytes);
std::string to_hex(const Digest& digest);
bool from_hex_strict(std::string_view hex, std::vector<uint8_t>& out);
bool digest_from_hex_strict(std::string_view hex, Digest& out);

std::string sha256_hex(std::string_view text);

}  // namespace aigw
