#pragma once

#include <functional>
#include <string>

#include "aigw/backend.hpp"

namespace aigw {

// Chat-completion-style streaming endpoint, spoken over HTTP with SSE
// ("data: {...}") or newline-delimited JSON response framing.
struct EndpointConfig {
  std::string base_url;                       // http://host:port
  std::string path = "/v1/chat/completions";
  std::string api_key_env;                    // env var holding the credential
  std::string model_name;                     // upstream model identifier
  std::string request_template_json = "{}";   // extra body fields, merged in
  double timeout_s = 30.0;
};

enum class UpstreamOutcome : uint8_t { completed, cancelled, error, timeout };

struct UpstreamStatus {
  UpstreamOutcome outcome = UpstreamOutcome::completed;
  int http_status = 0;
  std::string detail;
};

// Adapts one upstream streaming completion into local TokenEvents, with
// receive timestamps taken from `now_ms` (TFT/ITT measured at the gateway).
//
// completed / cancelled outcomes have already invoked callbacks.on_done (a
// mid-stream upstream close counts as cancelled: partial usage still gets
// metered). error / timeout outcomes mean no tokens flowed and on_done was
// not invoked; http_status preserves the upstream status when there was one.
UpstreamStatus real_endpoint_stream(const EndpointConfig& config,
                                    const GenerationRequest& request,
                                    const std::function<double()>& now_ms,
                                    const SessionCallbacks& callbacks,
                                    const std::function<bool()>& cancel_requested = {});

// Extracts the streamed text delta from one upstream JSON chunk; nullopt
// when the chunk carries no content at all (role prelude, finish message,
// error body, ...).
std::optional<std::string> extract_stream_delta(const std::string& chunk_json);

}  // namespace aigw
