#pragma once

#include <span>
#include <vector>

#include "aigw/admission.hpp"
#include "aigw/records.hpp"

namespace aigw {

// Reduces a token stream to its billable facts. Throws InconsistentStream on
// index gaps, non-monotone timestamps, or timing that contradicts the events.
// gpu_seconds is generation wall time (first token to done); queue wait and
// time-to-first-token are excluded.
UsageRecord meter_stream(std::span<const TokenEvent> events,
                         const GenerationRequest& request,
                         const SessionTiming& timing,
                         const std::string& model_id,
                         const std::string& deployment_id);

// Mean of the inter-token gaps; 0 when fewer than two events.
double mean_itt_of(std::span<const TokenEvent> events);

}  // namespace aigw
