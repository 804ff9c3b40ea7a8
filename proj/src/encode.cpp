#include "aigw/encode.hpp"

#include <cstring>

namespace aigw {

namespace {

class Writer {
 public:
  void raw_byte(uint8_t b) { out_.push_back(b); }

  void field_bytes(std::span<const uint8_t> payload) {
    put_u32(uint32_t(payload.size()));
    out_.insert(out_.end(), payload.begin(), payload.end());
  }

  void field_string(const std::string& s) {
    field_bytes({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
  }

  void field_u64(uint64_t v) {
    uint8_t buf[8];
    put_be64(buf, v);
    field_bytes({buf, 8});
  }

  void field_i64(int64_t v) { field_u64(uint64_t(v)); }

  void field_f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    field_u64(bits);
  }

  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  void put_u32(uint32_t v) {
    out_.push_back(uint8_t(v >> 24));
    out_.push_back(uint8_t(v >> 16));
    out_.push_back(uint8_t(v >> 8));
    out_.push_back(uint8_t(v));
  }

  static void put_be64(uint8_t* buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf[i] = uint8_t(v >> (56 - 8 * i));
  }

  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t raw_byte() {
    need(1);
    return bytes_[pos_++];
  }

  std::span<const uint8_t> field() {
    need(4);
    uint32_t len = (uint32_t(bytes_[pos_]) << 24) |
                   (uint32_t(bytes_[pos_ + 1]) << 16) |
                   (uint32_t(bytes_[pos_ + 2]) << 8) | uint32_t(bytes_[pos_ + 3]);
    pos_ += 4;
    need(len);
    auto out = bytes_.subspan(pos_, len);
    pos_ += len;
    return out;
  }

  std::string field_string() {
    auto b = field();
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
  }

  uint64_t field_u64() {
    auto b = field();
    if (b.size() != 8) fail(Errc::encoding_corrupt, "expected 8-byte integer");
    uint64_t v = 0;
    for (uint8_t byte : b) v = (v << 8) | byte;
    return v;
  }

  int64_t field_i64() { return int64_t(field_u64()); }

  double field_f64() {
    uint64_t bits = field_u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  void expect_end() const {
    if (!at_end()) fail(Errc::encoding_corrupt, "trailing bytes");
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) {
      fail(Errc::encoding_corrupt, "truncated encoding");
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

void write_usage_fields(Writer& w, const UsageRecord& r) {
  w.field_string(r.request_id);
  w.field_string(r.tenant_id);
  w.field_string(r.model_id);
  w.field_string(r.deployment_id);
  w.field_u64(r.input_tokens);
  w.field_u64(r.output_tokens);
  w.field_f64(r.gpu_seconds);
  w.field_u64(r.egress_bytes);
  w.field_f64(r.tft_ms);
  w.field_f64(r.mean_itt_ms);
  w.field_f64(r.t_start_ms);
  w.field_f64(r.t_done_ms);
}

UsageRecord read_usage_fields(Reader& rd) {
  UsageRecord r;
  r.request_id = rd.field_string();
  r.tenant_id = rd.field_string();
  r.model_id = rd.field_string();
  r.deployment_id = rd.field_string();
  r.input_tokens = rd.field_u64();
  r.output_tokens = rd.field_u64();
  r.gpu_seconds = rd.field_f64();
  r.egress_bytes = rd.field_u64();
  r.tft_ms = rd.field_f64();
  r.mean_itt_ms = rd.field_f64();
  r.t_start_ms = rd.field_f64();
  r.t_done_ms = rd.field_f64();
  return r;
}

// List field payload: u64 count, then each element as a u32-length-prefixed
// group of that element's fields.
template <typename WriteElem>
void write_list_field(Writer& w, uint64_t count, WriteElem write_elem) {
  std::vector<uint8_t> payload;
  for (int i = 0; i < 8; ++i) payload.push_back(uint8_t(count >> (56 - 8 * i)));
  for (uint64_t i = 0; i < count; ++i) {
    Writer elem;
    write_elem(elem, i);
    std::vector<uint8_t> bytes = elem.take();
    payload.push_back(uint8_t(bytes.size() >> 24));
    payload.push_back(uint8_t(bytes.size() >> 16));
    payload.push_back(uint8_t(bytes.size() >> 8));
    payload.push_back(uint8_t(bytes.size()));
    payload.insert(payload.end(), bytes.begin(), bytes.end());
  }
  w.field_bytes(payload);
}

uint64_t read_list_header(Reader& rd, Reader& out_items) {
  auto payload = rd.field();
  Reader inner(payload);
  if (payload.size() < 8) fail(Errc::encoding_corrupt, "short list header");
  uint64_t count = 0;
  for (int i = 0; i < 8; ++i) count = (count << 8) | payload[i];
  out_items = Reader(payload.subspan(8));
  return count;
}

}  // namespace

std::vector<uint8_t> canonical_encode(const BillableRecord& record) {
  Writer w;
  w.raw_byte(kEncodingVersion);

  if (const auto* usage = std::get_if<UsageRecord>(&record)) {
    w.raw_byte(uint8_t(RecordTag::usage_record));
    write_usage_fields(w, *usage);
  } else if (const auto* inv = std::get_if<Invoice>(&record)) {
    w.raw_byte(uint8_t(RecordTag::invoice));
    w.field_string(inv->invoice_id);
    w.field_string(inv->tenant_id);
    w.field_string(inv->period);
    write_list_field(w, inv->line_items.size(), [&](Writer& e, uint64_t i) {
      const LineItem& item = inv->line_items[i];
      e.field_u64(uint64_t(item.kind));
      e.field_string(item.ref);
      e.field_i64(item.amount.micro);
    });
    w.field_i64(inv->total.micro);
  } else if (const auto* shares = std::get_if<ShareAllocation>(&record)) {
    w.raw_byte(uint8_t(RecordTag::share_allocation));
    w.field_string(shares->invoice_id);
    std::vector<std::pair<std::string, Money>> entries(
        shares->allocations.begin(), shares->allocations.end());
    write_list_field(w, entries.size(), [&](Writer& e, uint64_t i) {
      e.field_string(entries[i].first);
      e.field_i64(entries[i].second.micro);
    });
  } else if (const auto* receipt = std::get_if<PaymentReceipt>(&record)) {
    w.raw_byte(uint8_t(RecordTag::payment_receipt));
    w.field_string(receipt->receipt_id);
    w.field_string(receipt->invoice_id);
    w.field_i64(receipt->amount.micro);
  } else if (const auto* list = std::get_if<UsageRecordList>(&record)) {
    w.raw_byte(uint8_t(RecordTag::usage_record_list));
    write_list_field(w, list->records.size(), [&](Writer& e, uint64_t i) {
      write_usage_fields(e, list->records[i]);
    });
  } else {
    fail(Errc::unsupported_record_type, "unhandled record variant");
  }
  return w.take();
}

BillableRecord canonical_decode(std::span<const uint8_t> bytes) {
  Reader rd(bytes);
  uint8_t version = rd.raw_byte();
  if (version != kEncodingVersion) {
    fail(Errc::unsupported_record_type,
         "unknown schema version " + std::to_string(int(version)));
  }
  uint8_t tag = rd.raw_byte();

  switch (RecordTag(tag)) {
    case RecordTag::usage_record: {
      UsageRecord r = read_usage_fields(rd);
      rd.expect_end();
      return r;
    }
    case RecordTag::invoice: {
      Invoice inv;
      inv.invoice_id = rd.field_string();
      inv.tenant_id = rd.field_string();
      inv.period = rd.field_string();
      Reader items{{}};
      uint64_t count = read_list_header(rd, items);
      for (uint64_t i = 0; i < count; ++i) {
        Reader elem(items.field());
        LineItem item;
        uint64_t kind = elem.field_u64();
        if (kind > uint64_t(LineItem::Kind::adjustment)) {
          fail(Errc::encoding_corrupt, "bad line item kind");
        }
        item.kind = LineItem::Kind(kind);
        item.ref = elem.field_string();
        item.amount = Money(elem.field_i64());
        elem.expect_end();
        inv.line_items.push_back(std::move(item));
      }
      items.expect_end();
      inv.total = Money(rd.field_i64());
      rd.expect_end();
      return inv;
    }
    case RecordTag::share_allocation: {
      ShareAllocation shares;
      shares.invoice_id = rd.field_string();
      Reader items{{}};
      uint64_t count = read_list_header(rd, items);
      for (uint64_t i = 0; i < count; ++i) {
        Reader elem(items.field());
        std::string stakeholder = elem.field_string();
        Money amount(elem.field_i64());
        elem.expect_end();
        shares.allocations.emplace(std::move(stakeholder), amount);
      }
      items.expect_end();
      rd.expect_end();
      return shares;
    }
    case RecordTag::payment_receipt: {
      PaymentReceipt receipt;
      receipt.receipt_id = rd.field_string();
      receipt.invoice_id = rd.field_string();
      receipt.amount = Money(rd.field_i64());
      rd.expect_end();
      return receipt;
    }
    case RecordTag::usage_record_list: {
      UsageRecordList list;
      Reader items{{}};
      uint64_t count = read_list_header(rd, items);
      for (uint64_t i = 0; i < count; ++i) {
        Reader elem(items.field());
        list.records.push_back(read_usage_fields(elem));
        elem.expect_end();
      }
      items.expect_end();
      rd.expect_end();
      return list;
    }
  }
  fail(Errc::unsupported_record_type,
       "unknown record tag " + std::to_string(int(tag)));
}

Digest hash_chain_digest(const Digest& prev_digest,
                         std::span<const uint8_t> payload) {
  Sha256 h;
  h.update(std::span<const uint8_t>(prev_digest.data(), prev_digest.size()));
  h.update(payload);
  return h.finish();
}

}  // namespace aigw
