#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>

#include "aigw/catalog.hpp"
#include "aigw/records.hpp"

namespace aigw {

// Per-usage price under a scheme. Subscription schemes price individual
// usage at zero; their monthly fee and overage are applied by build_invoice.
// Resource pricing bills ceil(gpu_seconds) so integer money never fractions.
Money price(const UsageRecord& usage, const PricingScheme& scheme);

// One invoice for one tenant and one UTC calendar month: a line item per
// usage record, plus fee/overage lines for subscription schemes. The total
// is the exact sum of line items.
Invoice build_invoice(const std::string& tenant_id, const std::string& period,
                      std::span<const UsageRecord> records,
                      const PricingScheme& scheme);

// Largest-remainder apportionment of `total` by ppm weights: every micro-unit
// of the total is assigned to exactly one stakeholder.
std::map<std::string, Money> apportion_exact(
    Money total, const std::map<std::string, int64_t>& splits_ppm);

ShareAllocation allocate_shares(const Invoice& invoice,
                                const std::map<std::string, int64_t>& splits_ppm);

// Payment-gateway stub: records a receipt per invoice, idempotently. Repeat
// calls for the same invoice return the original receipt. Receipts persist
// as JSON lines when a path is attached.
class PaymentGateway {
 public:
  PaymentGateway() = default;
  explicit PaymentGateway(const std::filesystem::path& receipts_file);

  PaymentReceipt pay(const Invoice& invoice);
  std::optional<PaymentReceipt> receipt_for(const std::string& invoice_id) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, PaymentReceipt> receipts_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace aigw
