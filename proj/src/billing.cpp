#include "aigw/billing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace aigw {

Money price(const UsageRecord& usage, const PricingScheme& scheme) {
  switch (scheme.variant) {
    case PricingVariant::per_call:
      return scheme.flat_per_call;
    case PricingVariant::per_token: {
      Money in = money_mul_rate(int64_t(usage.input_tokens), scheme.rate_in_per_token);
      Money out = money_mul_rate(int64_t(usage.output_tokens), scheme.rate_out_per_token);
      return money_add(in, out);
    }
    case PricingVariant::resource: {
      int64_t gpu_units = int64_t(std::ceil(usage.gpu_seconds));
      Money gpu = money_mul_rate(gpu_units, scheme.rate_gpu_second);
      Money egress = money_mul_rate(int64_t(usage.egress_bytes), scheme.rate_egress_byte);
      return money_add(gpu, egress);
    }
    case PricingVariant::subscription:
      return Money(0);
  }
  fail(Errc::invalid_argument, "unknown pricing variant");
}

Invoice build_invoice(const std::string& tenant_id, const std::string& period,
                      std::span<const UsageRecord> records,
                      const PricingScheme& scheme) {
  Invoice invoice;
  invoice.invoice_id = "inv-" + tenant_id + "-" + period;
  invoice.tenant_id = tenant_id;
  invoice.period = period;

  Money total(0);
  uint64_t output_tokens = 0;
  for (const UsageRecord& usage : records) {
    if (usage.tenant_id != tenant_id) {
      fail(Errc::mixed_tenant,
           usage.request_id + " belongs to " + usage.tenant_id);
    }
    Money amount = price(usage, scheme);
    invoice.line_items.push_back(
        {LineItem::Kind::usage, usage.request_id, amount});
    total = money_add(total, amount);
    output_tokens += usage.output_tokens;
  }

  if (scheme.variant == PricingVariant::subscription) {
    invoice.line_items.push_back({LineItem::Kind::subscription_fee,
                                  "monthly:" + period, scheme.monthly_fee});
    total = money_add(total, scheme.monthly_fee);
    if (int64_t(output_tokens) > scheme.included_tokens) {
      int64_t over = int64_t(output_tokens) - scheme.included_tokens;
      Money overage = money_mul_rate(over, scheme.overage_rate_out);
      invoice.line_items.push_back(
          {LineItem::Kind::overage, "tokens_over:" + std::to_string(over), overage});
      total = money_add(total, overage);
    }
  }

  invoice.total = total;
  return invoice;
}

std::map<std::string, Money> apportion_exact(
    Money total, const std::map<std::string, int64_t>& splits_ppm) {
  int64_t sum_ppm = 0;
  for (const auto& [_, ppm] : splits_ppm) sum_ppm += ppm;
  if (sum_ppm != kShareDenominatorPpm || splits_ppm.empty()) {
    fail(Errc::invalid_argument, "share splits must sum to 1,000,000 ppm");
  }

  // Work on the magnitude; negative totals (refunds) mirror exactly.
  bool negative = total.micro < 0;
  if (total.micro == INT64_MIN) fail(Errc::arithmetic_overflow, "apportion");
  int64_t magnitude = negative ? -total.micro : total.micro;

  struct Part {
    const std::string* stakeholder;
    int64_t quotient;
    int64_t remainder;
  };
  std::vector<Part> parts;
  parts.reserve(splits_ppm.size());
  int64_t assigned = 0;
  for (const auto& [stakeholder, ppm] : splits_ppm) {
    __int128 product = __int128(magnitude) * ppm;
    int64_t quotient = int64_t(product / kShareDenominatorPpm);
    int64_t remainder = int64_t(product % kShareDenominatorPpm);
    parts.push_back({&stakeholder, quotient, remainder});
    assigned += quotient;
  }

  int64_t leftover = magnitude - assigned;  // in [0, splits - 1]
  std::stable_sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return *a.stakeholder < *b.stakeholder;
  });
  for (int64_t i = 0; i < leftover; ++i) parts[size_t(i)].quotient += 1;

  std::map<std::string, Money> out;
  for (const Part& p : parts) {
    out[*p.stakeholder] = Money(negative ? -p.quotient : p.quotient);
  }
  return out;
}

ShareAllocation allocate_shares(const Invoice& invoice,
                                const std::map<std::string, int64_t>& splits_ppm) {
  ShareAllocation allocation;
  allocation.invoice_id = invoice.invoice_id;
  allocation.allocations = apportion_exact(invoice.total, splits_ppm);
  return allocation;
}

PaymentGateway::PaymentGateway(const std::filesystem::path& receipts_file)
    : file_(receipts_file) {
  std::ifstream in(receipts_file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(Errc::storage_corrupt, "receipts file");
    PaymentReceipt r;
    r.receipt_id = j.at("receipt_id").get<std::string>();
    r.invoice_id = j.at("invoice_id").get<std::string>();
    r.amount = Money(j.at("amount_u").get<int64_t>());
    receipts_.emplace(r.invoice_id, std::move(r));
  }
}

PaymentReceipt PaymentGateway::pay(const Invoice& invoice) {
  if (invoice.total.micro < 0) {
    fail(Errc::invalid_argument, "cannot capture a negative invoice total");
  }
  std::lock_guard guard(mutex_);
  auto it = receipts_.find(invoice.invoice_id);
  if (it != receipts_.end()) return it->second;

  PaymentReceipt receipt;
  receipt.receipt_id = "rcpt-" + invoice.invoice_id;
  receipt.invoice_id = invoice.invoice_id;
  receipt.amount = invoice.total;
  receipts_.emplace(invoice.invoice_id, receipt);

  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    out << nlohmann::json{{"receipt_id", receipt.receipt_id},
                          {"invoice_id", receipt.invoice_id},
                          {"amount_u", receipt.amount.micro}}
               .dump()
        << "\n";
  }
  return receipt;
}

std::optional<PaymentReceipt> PaymentGateway::receipt_for(
    const std::string& invoice_id) const {
  std::lock_guard guard(mutex_);
  auto it = receipts_.find(invoice_id);
  if (it == receipts_.end()) return std::nullopt;
  return it->second;
}

}  // namespace aigw
