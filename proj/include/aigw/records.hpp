#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "aigw/domain.hpp"

namespace aigw {

// Metered facts for one completed (or cancelled) streaming session.
struct UsageRecord {
  std::string request_id;
  std::string tenant_id;
  std::string model_id;
  std::string deployment_id;
  uint64_t input_tokens = 0;
  uint64_t output_tokens = 0;
  double gpu_seconds = 0.0;  // generation wall time, queue wait excluded
  uint64_t egress_bytes = 0;
  double tft_ms = 0.0;
  double mean_itt_ms = 0.0;
  double t_start_ms = 0.0;
  double t_done_ms = 0.0;

  friend bool operator==(const UsageRecord&, const UsageRecord&) = default;
};

struct LineItem {
  enum class Kind : uint8_t { usage = 0, subscription_fee = 1, overage = 2, adjustment = 3 };
  Kind kind = Kind::usage;
  std::string ref;  // usage request_id, or a label for fee/overage lines
  Money amount;

  friend bool operator==(const LineItem&, const LineItem&) = default;
};

struct Invoice {
  std::string invoice_id;
  std::string tenant_id;
  std::string period;  // UTC calendar month, "YYYY-MM"
  std::vector<LineItem> line_items;
  Money total;  // always the exact sum of line_items

  friend bool operator==(const Invoice&, const Invoice&) = default;
};

struct ShareAllocation {
  std::string invoice_id;
  std::map<std::string, Money> allocations;  // stakeholder -> amount

  friend bool operator==(const ShareAllocation&, const ShareAllocation&) = default;
};

struct PaymentReceipt {
  std::string receipt_id;
  std::string invoice_id;
  Money amount;

  friend bool operator==(const PaymentReceipt&, const PaymentReceipt&) = default;
};

struct UsageRecordList {
  std::vector<UsageRecord> records;

  friend bool operator==(const UsageRecordList&, const UsageRecordList&) = default;
};

// Closed set of records that can be canonically encoded and ledgered.
using BillableRecord = std::variant<UsageRecord, Invoice, ShareAllocation,
                                    PaymentReceipt, UsageRecordList>;

const char* line_item_kind_name(LineItem::Kind kind);
LineItem::Kind line_item_kind_from_name(std::string_view name);

// UTC calendar month ("YYYY-MM") containing the given epoch timestamp.
std::string period_of_ms(double epoch_ms);

// UTC calendar day ("YYYY-MM-DD") containing the given epoch timestamp.
std::string day_of_ms(double epoch_ms);

}  // namespace aigw
