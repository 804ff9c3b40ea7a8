#include "aigw/ledger.hpp"

#include <fstream>

#include "json.hpp"

namespace aigw {

using nlohmann::json;

namespace {

struct ParsedLine {
  uint64_t seq;
  Digest prev;
  std::vector<uint8_t> payload;
  Digest digest;
};

// Strict parse of one persisted entry; any deviation (syntax, field types,
// non-lowercase hex) is a failure.
bool parse_line(const std::string& line, ParsedLine& out) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  if (!j.contains("seq") || !j.contains("prev_digest") ||
      !j.contains("payload") || !j.contains("digest")) {
    return false;
  }
  if (!j["seq"].is_number_unsigned()) return false;
  out.seq = j["seq"].get<uint64_t>();
  if (!j["prev_digest"].is_string() || !j["payload"].is_string() ||
      !j["digest"].is_string()) {
    return false;
  }
  if (!digest_from_hex_strict(j["prev_digest"].get<std::string>(), out.prev)) return false;
  if (!from_hex_strict(j["payload"].get<std::string>(), out.payload)) return false;
  if (!digest_from_hex_strict(j["digest"].get<std::string>(), out.digest)) return false;
  return true;
}

}  // namespace

Ledger::Ledger(const std::filesystem::path& file) : file_(file) {
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path());
  }
  // Recover chain position from an existing file.
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ParsedLine parsed;
    if (!parse_line(line, parsed)) {
      fail(Errc::storage_corrupt, "unreadable ledger line in " + file_.string());
    }
    if (parsed.seq != next_seq_) {
      fail(Errc::storage_corrupt, "ledger sequence gap in " + file_.string());
    }
    next_seq_ = parsed.seq + 1;
    last_digest_ = parsed.digest;
  }
}

LedgerEntry Ledger::append(const BillableRecord& record) {
  std::lock_guard guard(mutex_);
  LedgerEntry entry;
  entry.seq = next_seq_;
  entry.prev_digest = last_digest_;
  entry.payload = canonical_encode(record);
  entry.digest = hash_chain_digest(entry.prev_digest, entry.payload);

  json line{{"digest", to_hex(entry.digest)},
            {"payload", to_hex(entry.payload)},
            {"prev_digest", to_hex(entry.prev_digest)},
            {"seq", entry.seq}};
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) fail(Errc::storage_corrupt, "cannot append to " + file_.string());
  out << line.dump() << "\n";
  out.flush();
  if (!out) fail(Errc::storage_corrupt, "append failed for " + file_.string());

  next_seq_ += 1;
  last_digest_ = entry.digest;
  return entry;
}

LedgerVerifyResult Ledger::verify() const {
  std::lock_guard guard(mutex_);
  return verify_file(file_);
}

LedgerVerifyResult Ledger::verify_file(const std::filesystem::path& file) {
  LedgerVerifyResult result;
  std::ifstream in(file);
  if (!in) return result;  // absent ledger == empty ledger == valid

  Digest expected_prev = kGenesisDigest;
  uint64_t expected_seq = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ParsedLine parsed;
    if (!parse_line(line, parsed) || parsed.seq != expected_seq ||
        parsed.prev != expected_prev ||
        parsed.digest != hash_chain_digest(parsed.prev, parsed.payload)) {
      result.valid = false;
      result.first_bad_seq = expected_seq;
      return result;
    }
    expected_prev = parsed.digest;
    expected_seq += 1;
    result.entry_count += 1;
  }
  return result;
}

uint64_t Ledger::entry_count() const {
  std::lock_guard guard(mutex_);
  return next_seq_;
}

std::vector<LedgerEntry> Ledger::read_all() const {
  std::lock_guard guard(mutex_);
  std::vector<LedgerEntry> entries;
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ParsedLine parsed;
    if (!parse_line(line, parsed)) {
      fail(Errc::storage_corrupt, "unreadable ledger line in " + file_.string());
    }
    entries.push_back(LedgerEntry{parsed.seq, parsed.prev,
                                  std::move(parsed.payload), parsed.digest});
  }
  return entries;
}

}  // namespace aigw
