#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <vector>

#include "aigw/encode.hpp"

namespace aigw {

struct LedgerEntry {
  uint64_t seq = 0;
  Digest prev_digest{};
  std::vector<uint8_t> payload;  // canonical record encoding
  Digest digest{};               // hash_chain_digest(prev_digest, payload)
};

struct LedgerVerifyResult {
  bool valid = true;
  std::optional<uint64_t> first_bad_seq;
  uint64_t entry_count = 0;
};

// Append-only hash-chained audit ledger, one JSON line per entry:
//   {"digest":"<hex64>","payload":"<hex>","prev_digest":"<hex64>","seq":N}
// Entry 0 chains from 32 zero bytes; seq is gap-free. Appends are strictly
// serialized. Verification recomputes the whole chain from disk and reports
// the first sequence number that fails (strict lowercase hex, exact seq
// order, digest recomputation).
class Ledger {
 public:
  explicit Ledger(const std::filesystem::path& file);

  LedgerEntry append(const BillableRecord& record);
  LedgerVerifyResult verify() const;

  uint64_t entry_count() const;
  const std::filesystem::path& path() const { return file_; }

  // Entries re-read from disk; decoding failures throw StorageCorrupt.
  std::vector<LedgerEntry> read_all() const;

  static LedgerVerifyResult verify_file(const std::filesystem::path& file);

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  uint64_t next_seq_ = 0;
  Digest last_digest_ = kGenesisDigest;
};

}  // namespace aigw
