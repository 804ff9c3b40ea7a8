#pragma once

#include <string>

#include "aigw/records.hpp"
#include "json.hpp"

namespace aigw {

nlohmann::json usage_to_json(const UsageRecord& usage);
UsageRecord usage_from_json(const nlohmann::json& j);

nlohmann::json invoice_to_json(const Invoice& invoice);
nlohmann::json shares_to_json(const ShareAllocation& shares);
nlohmann::json receipt_to_json(const PaymentReceipt& receipt);

}  // namespace aigw
