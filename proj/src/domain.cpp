#include "aigw/domain.hpp"

#include <cinttypes>
#include <cstdio>

namespace aigw {

Money money_add(Money a, Money b) {
  int64_t out;
  if (__builtin_add_overflow(a.micro, b.micro, &out)) {
    fail(Errc::arithmetic_overflow, "money_add");
  }
  return Money(out);
}

Money money_sub(Money a, Money b) {
  int64_t out;
  if (__builtin_sub_overflow(a.micro, b.micro, &out)) {
    fail(Errc::arithmetic_overflow, "money_sub");
  }
  return Money(out);
}

Money money_mul_rate(int64_t count, Money rate) {
  if (count < 0) {
    fail(Errc::invalid_argument, "money_mul_rate: negative count");
  }
  int64_t out;
  if (__builtin_mul_overflow(count, rate.micro, &out)) {
    fail(Errc::arithmetic_overflow, "money_mul_rate");
  }
  return Money(out);
}

Money money_negate(Money a) {
  if (a.micro == INT64_MIN) fail(Errc::arithmetic_overflow, "money_negate");
  return Money(-a.micro);
}

std::string money_to_string(Money a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRId64, a.micro);
  return std::string(buf) + "u";
}

double LatencyBounds::bound_ms(LatencyClass c) const {
  switch (c) {
    case LatencyClass::realtime: return realtime_ms;
    case LatencyClass::interactive: return interactive_ms;
    case LatencyClass::standard: return standard_ms;
    case LatencyClass::batch: return batch_ms;
  }
  fail(Errc::invalid_argument, "unknown latency class");
}

void LatencyBounds::validate() const {
  if (!(realtime_ms > 0.0 && interactive_ms > realtime_ms &&
        standard_ms > interactive_ms && batch_ms > standard_ms)) {
    fail(Errc::config_invalid,
         "latency class TFT bounds must be positive and strictly increasing");
  }
}

const char* latency_class_name(LatencyClass c) {
  switch (c) {
    case LatencyClass::realtime: return "realtime";
    case LatencyClass::interactive: return "interactive";
    case LatencyClass::standard: return "standard";
    case LatencyClass::batch: return "batch";
  }
  return "unknown";
}

LatencyClass latency_class_from_name(std::string_view name) {
  if (name == "realtime") return LatencyClass::realtime;
  if (name == "interactive") return LatencyClass::interactive;
  if (name == "standard") return LatencyClass::standard;
  if (name == "batch") return LatencyClass::batch;
  fail(Errc::invalid_argument, "unknown latency class: " + std::string(name));
}

void SessionTiming::validate() const {
  if (!(t_request_ms <= t_first_token_ms && t_first_token_ms <= t_done_ms)) {
    fail(Errc::inconsistent_stream,
         "session timing must satisfy t_request <= t_first_token <= t_done");
  }
}

std::vector<double> itt_gaps(const std::vector<TokenEvent>& events) {
  std::vector<double> gaps;
  if (events.size() < 2) return gaps;
  gaps.reserve(events.size() - 1);
  for (size_t k = 1; k < events.size(); ++k) {
    gaps.push_back(events[k].t_emit_ms - events[k - 1].t_emit_ms);
  }
  return gaps;
}

}  // namespace aigw
