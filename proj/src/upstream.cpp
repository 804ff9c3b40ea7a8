#include "aigw/upstream.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

namespace aigw {

using nlohmann::json;

std::optional<std::string> extract_stream_delta(const std::string& chunk_json) {
  json j = json::parse(chunk_json, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    return std::nullopt;
  }
  const json& first = (*choices)[0];
  if (first.contains("delta") && first["delta"].contains("content") &&
      first["delta"]["content"].is_string()) {
    return first["delta"]["content"].get<std::string>();
  }
  if (first.contains("text") && first["text"].is_string()) {
    return first["text"].get<std::string>();
  }
  return std::nullopt;
}

namespace {

std::string build_request_body(const EndpointConfig& config,
                               const GenerationRequest& request) {
  json body = json::parse(config.request_template_json, nullptr, false);
  if (body.is_discarded() || !body.is_object()) body = json::object();

  body["model"] = config.model_name;
  body["stream"] = true;
  body["max_tokens"] = request.max_output_tokens;
  if (request.ignore_eos) body["ignore_eos"] = true;

  std::string prompt;
  if (request.prompt_text) {
    prompt = *request.prompt_text;
  } else {
    // Synthetic prompt of roughly prompt_tokens whitespace-separated words.
    int64_t n = request.prompt_token_count();
    prompt.reserve(size_t(n) * 4);
    for (int64_t i = 0; i < n; ++i) prompt += i == 0 ? "tok" : " tok";
  }
  if (!body.contains("messages")) {
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  }
  return body.dump();
}

// One SSE "data:" line or raw NDJSON line -> token emission.
struct LineAccumulator {
  std::string buffer;

  template <typename Fn>
  void feed(const char* data, size_t len, Fn&& per_line) {
    buffer.append(data, len);
    size_t start = 0;
    for (;;) {
      size_t nl = buffer.find('\n', start);
      if (nl == std::string::npos) break;
      std::string line = buffer.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      per_line(line);
      start = nl + 1;
    }
    buffer.erase(0, start);
  }
};

}  // namespace

UpstreamStatus real_endpoint_stream(const EndpointConfig& config,
                                    const GenerationRequest& request,
                                    const std::function<double()>& now_ms,
                                    const SessionCallbacks& callbacks,
                                    const std::function<bool()>& cancel_requested) {
  httplib::Client client(config.base_url);
  client.set_connection_timeout(std::chrono::milliseconds(
      int64_t(config.timeout_s * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(int64_t(config.timeout_s * 1000)));

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  double t_request = now_ms();
  double t_first = t_request;
  double t_last = t_request;
  uint64_t index = 0;
  int seen_status = 0;
  bool aborted_by_cancel = false;
  LineAccumulator lines;

  httplib::Request req;
  req.method = "POST";
  req.path = config.path;
  req.headers = headers;
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", "text/event-stream");
  req.body = build_request_body(config, request);
  req.response_handler = [&](const httplib::Response& response) {
    seen_status = response.status;
    return true;
  };
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    if (cancel_requested && cancel_requested()) {
      aborted_by_cancel = true;
      return false;
    }
    if (seen_status < 200 || seen_status >= 300) return true;  // error body
    lines.feed(data, len, [&](const std::string& line) {
      std::string_view payload = line;
      if (payload.rfind("data:", 0) == 0) payload.remove_prefix(5);
      while (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);
      if (payload.empty() || payload == "[DONE]") return;
      auto text = extract_stream_delta(std::string(payload));
      if (!text) return;  // role prelude / finish chunk / non-token noise
      double t = now_ms();
      TokenEvent event;
      event.request_id = request.request_id;
      event.index = index++;
      // Receive timestamps must be strictly increasing even when several
      // chunks land in one read.
      if (t <= t_last && index > 1) t = std::nextafter(t_last, 1e18);
      event.t_emit_ms = t;
      event.payload_bytes = line.size() + 1;
      event.text = std::move(*text);
      if (index == 1) t_first = t;
      t_last = t;
      if (callbacks.on_token) callbacks.on_token(event);
    });
    return true;
  };

  httplib::Result result = client.send(req);
  double t_done = now_ms();
  if (t_done < t_last) t_done = t_last;

  auto finish = [&](bool cancelled) {
    SessionTiming timing;
    timing.t_request_ms = t_request;
    timing.t_first_token_ms = index > 0 ? t_first : t_request;
    timing.t_done_ms = t_done;
    if (callbacks.on_done) callbacks.on_done(timing, cancelled);
  };

  if (result && result->status >= 200 && result->status < 300) {
    finish(false);
    return {UpstreamOutcome::completed, result->status, {}};
  }

  if (aborted_by_cancel) {
    finish(true);
    return {UpstreamOutcome::cancelled, 0, "cancelled by client"};
  }

  int status = result && result->status > 0 ? result->status : seen_status;
  if (status > 0 && (status < 200 || status >= 300)) {
    // Upstream answered with a non-success status; nothing was streamed.
    return {UpstreamOutcome::error, status,
            "upstream status " + std::to_string(status)};
  }

  httplib::Error err = result.error();
  if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
    if (index > 0) {
      // Stream broke after tokens flowed: treat as a cancelled session so the
      // partial usage is still metered.
      finish(true);
      return {UpstreamOutcome::cancelled, 0, "upstream closed mid-stream"};
    }
    if (err == httplib::Error::ConnectionTimeout) {
      return {UpstreamOutcome::timeout, 0, "connection timeout"};
    }
  }
  if (index > 0) {
    finish(true);
    return {UpstreamOutcome::cancelled, 0,
            "transport error mid-stream: " + httplib::to_string(err)};
  }
  return {UpstreamOutcome::error, 0, httplib::to_string(err)};
}

}  // namespace aigw
