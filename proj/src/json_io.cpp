#include "aigw/json_io.hpp"

namespace aigw {

using nlohmann::json;

json usage_to_json(const UsageRecord& u) {
  return json{{"request_id", u.request_id},
              {"tenant_id", u.tenant_id},
              {"model_id", u.model_id},
              {"deployment_id", u.deployment_id},
              {"input_tokens", u.input_tokens},
              {"output_tokens", u.output_tokens},
              {"gpu_seconds", u.gpu_seconds},
              {"egress_bytes", u.egress_bytes},
              {"tft_ms", u.tft_ms},
              {"mean_itt_ms", u.mean_itt_ms},
              {"t_start_ms", u.t_start_ms},
              {"t_done_ms", u.t_done_ms}};
}

UsageRecord usage_from_json(const json& j) {
  UsageRecord u;
  u.request_id = j.at("request_id").get<std::string>();
  u.tenant_id = j.at("tenant_id").get<std::string>();
  u.model_id = j.at("model_id").get<std::string>();
  u.deployment_id = j.at("deployment_id").get<std::string>();
  u.input_tokens = j.at("input_tokens").get<uint64_t>();
  u.output_tokens = j.at("output_tokens").get<uint64_t>();
  u.gpu_seconds = j.at("gpu_seconds").get<double>();
  u.egress_bytes = j.at("egress_bytes").get<uint64_t>();
  u.tft_ms = j.at("tft_ms").get<double>();
  u.mean_itt_ms = j.at("mean_itt_ms").get<double>();
  u.t_start_ms = j.at("t_start_ms").get<double>();
  u.t_done_ms = j.at("t_done_ms").get<double>();
  return u;
}

json invoice_to_json(const Invoice& invoice) {
  json items = json::array();
  for (const LineItem& item : invoice.line_items) {
    items.push_back(json{{"kind", line_item_kind_name(item.kind)},
                         {"ref", item.ref},
                         {"amount_u", item.amount.micro}});
  }
  return json{{"invoice_id", invoice.invoice_id},
              {"tenant_id", invoice.tenant_id},
              {"period", invoice.period},
              {"line_items", items},
              {"total_u", invoice.total.micro}};
}

json shares_to_json(const ShareAllocation& shares) {
  json allocations = json::object();
  for (const auto& [stakeholder, amount] : shares.allocations) {
    allocations[stakeholder] = amount.micro;
  }
  return json{{"invoice_id", shares.invoice_id}, {"allocations_u", allocations}};
}

json receipt_to_json(const PaymentReceipt& receipt) {
  return json{{"receipt_id", receipt.receipt_id},
              {"invoice_id", receipt.invoice_id},
              {"amount_u", receipt.amount.micro}};
}

}  // namespace aigw
