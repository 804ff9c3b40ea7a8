#include "aigw/records.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>

namespace aigw {

const char* line_item_kind_name(LineItem::Kind kind) {
  switch (kind) {
    case LineItem::Kind::usage: return "usage";
    case LineItem::Kind::subscription_fee: return "subscription_fee";
    case LineItem::Kind::overage: return "overage";
    case LineItem::Kind::adjustment: return "adjustment";
  }
  return "unknown";
}

LineItem::Kind line_item_kind_from_name(std::string_view name) {
  if (name == "usage") return LineItem::Kind::usage;
  if (name == "subscription_fee") return LineItem::Kind::subscription_fee;
  if (name == "overage") return LineItem::Kind::overage;
  if (name == "adjustment") return LineItem::Kind::adjustment;
  fail(Errc::invalid_argument, "unknown line item kind: " + std::string(name));
}

namespace {
std::tm utc_parts(double epoch_ms) {
  time_t secs = time_t(std::floor(epoch_ms / 1000.0));
  std::tm parts{};
  gmtime_r(&secs, &parts);
  return parts;
}
}  // namespace

std::string period_of_ms(double epoch_ms) {
  std::tm parts = utc_parts(epoch_ms);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", parts.tm_year + 1900,
                parts.tm_mon + 1);
  return buf;
}

std::string day_of_ms(double epoch_ms) {
  std::tm parts = utc_parts(epoch_ms);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", parts.tm_year + 1900,
                parts.tm_mon + 1, parts.tm_mday);
  return buf;
}

}  // namespace aigw
