#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aigw/error.hpp"

namespace aigw {

// Amount in micro currency units (1e-6 of one unit). All arithmetic is
// checked integer arithmetic; overflow throws, never wraps. Negative values
// are legal only for adjustment/refund line items.
struct Money {
  int64_t micro = 0;

  constexpr Money() = default;
  constexpr explicit Money(int64_t micro_units) : micro(micro_units) {}

  friend constexpr bool operator==(Money, Money) = default;
  friend constexpr auto operator<=>(Money, Money) = default;
};

Money money_add(Money a, Money b);
Money money_sub(Money a, Money b);

// Exact `count * rate`, count >= 0. Overflow is a hard error.
Money money_mul_rate(int64_t count, Money rate);

Money money_negate(Money a);
std::string money_to_string(Money a);

// Latency/QoS tier requested by a client and allowed by a plan. Ordered
// strictest first; each tier's max-TFT bound must exceed the previous one.
enum class LatencyClass : uint8_t { realtime = 0, interactive, standard, batch };

struct LatencyBounds {
  double realtime_ms = 250.0;
  double interactive_ms = 1000.0;
  double standard_ms = 5000.0;
  double batch_ms = 60000.0;

  double bound_ms(LatencyClass c) const;
  void validate() const;  // throws config_invalid unless strictly increasing
};

const char* latency_class_name(LatencyClass c);
LatencyClass latency_class_from_name(std::string_view name);

// One streamed token observed on the session clock.
struct TokenEvent {
  std::string request_id;
  uint64_t index = 0;       // consecutive from 0 within a session
  double t_emit_ms = 0.0;   // strictly increasing within a session
  uint64_t payload_bytes = 0;
  std::string text;         // streamed content when an upstream provides it

  friend bool operator==(const TokenEvent&, const TokenEvent&) = default;
};

// Request / first-token / completion instants of one streaming session.
struct SessionTiming {
  double t_request_ms = 0.0;
  double t_first_token_ms = 0.0;
  double t_done_ms = 0.0;

  double tft_ms() const { return t_first_token_ms - t_request_ms; }
  void validate() const;  // t_request <= t_first_token <= t_done
};

// Gaps t_emit[k] - t_emit[k-1], k >= 1.
std::vector<double> itt_gaps(const std::vector<TokenEvent>& events);

}  // namespace aigw
