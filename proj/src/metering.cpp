#include "aigw/metering.hpp"

namespace aigw {

double mean_itt_of(std::span<const TokenEvent> events) {
  if (events.size() < 2) return 0.0;
  double span_ms = events.back().t_emit_ms - events.front().t_emit_ms;
  return span_ms / double(events.size() - 1);
}

UsageRecord meter_stream(std::span<const TokenEvent> events,
                         const GenerationRequest& request,
                         const SessionTiming& timing,
                         const std::string& model_id,
                         const std::string& deployment_id) {
  timing.validate();

  uint64_t egress = 0;
  for (size_t k = 0; k < events.size(); ++k) {
    const TokenEvent& ev = events[k];
    if (ev.index != k) {
      fail(Errc::inconsistent_stream,
           "token index gap at position " + std::to_string(k));
    }
    if (k > 0 && !(ev.t_emit_ms > events[k - 1].t_emit_ms)) {
      fail(Errc::inconsistent_stream,
           "non-monotone token timestamps at index " + std::to_string(k));
    }
    egress += ev.payload_bytes;
  }
  if (!events.empty()) {
    if (events.front().t_emit_ms != timing.t_first_token_ms) {
      fail(Errc::inconsistent_stream, "first token disagrees with timing");
    }
    if (events.back().t_emit_ms > timing.t_done_ms) {
      fail(Errc::inconsistent_stream, "token emitted after t_done");
    }
  }

  UsageRecord usage;
  usage.request_id = request.request_id;
  usage.tenant_id = request.tenant_id;
  usage.model_id = model_id;
  usage.deployment_id = deployment_id;
  usage.input_tokens = uint64_t(request.prompt_token_count());
  usage.output_tokens = events.size();
  usage.gpu_seconds =
      events.empty() ? 0.0 : (timing.t_done_ms - timing.t_first_token_ms) / 1000.0;
  usage.egress_bytes = egress;
  usage.tft_ms = events.empty() ? 0.0 : timing.tft_ms();
  usage.mean_itt_ms = mean_itt_of(events);
  usage.t_start_ms = timing.t_request_ms;
  usage.t_done_ms = timing.t_done_ms;
  return usage;
}

}  // namespace aigw
