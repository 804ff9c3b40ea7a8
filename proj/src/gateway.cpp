#include "aigw/gateway.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "aigw/json_io.hpp"

namespace aigw {

using nlohmann::json;

namespace {

std::string escaped_json_string(const std::string& raw) {
  return json(raw).dump();
}

}  // namespace

std::string wire_token_line(const TokenEvent& event, double t_request_ms) {
  char buf[96];
  double t_rel = event.t_emit_ms - t_request_ms;
  if (event.text.empty()) {
    std::snprintf(buf, sizeof(buf),
                  "{\"type\":\"token\",\"index\":%" PRIu64 ",\"t_rel_ms\":%.3f}\n",
                  event.index, t_rel);
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "{\"type\":\"token\",\"index\":%" PRIu64
                                  ",\"text\":",
                event.index);
  std::string line = buf;
  line += escaped_json_string(event.text);
  std::snprintf(buf, sizeof(buf), ",\"t_rel_ms\":%.3f}\n", t_rel);
  line += buf;
  return line;
}

uint64_t wire_token_line_length(const TokenEvent& event, double t_request_ms) {
  if (event.text.empty()) {
    double t_rel = event.t_emit_ms - t_request_ms;
    int n = std::snprintf(nullptr, 0,
                          "{\"type\":\"token\",\"index\":%" PRIu64
                          ",\"t_rel_ms\":%.3f}\n",
                          event.index, t_rel);
    return uint64_t(n);
  }
  return wire_token_line(event, t_request_ms).size();
}

std::string wire_terminal_line(const TerminalEvent& event) {
  json j;
  switch (event.kind) {
    case TerminalEvent::Kind::done:
    case TerminalEvent::Kind::cancelled: {
      j["type"] = event.kind == TerminalEvent::Kind::done ? "done" : "cancelled";
      if (event.usage) j["usage"] = usage_to_json(*event.usage);
      break;
    }
    case TerminalEvent::Kind::rejected:
      j["type"] = "error";
      j["reason"] = reject_reason_name(event.reject_reason);
      j["status"] = event.http_status;
      break;
    case TerminalEvent::Kind::error:
      j["type"] = "error";
      j["reason"] = event.message;
      j["status"] = event.http_status;
      break;
  }
  return j.dump() + "\n";
}

struct Gateway::SessionContext {
  GenerationRequest request;
  std::string reservation_id;
  std::string resolved_model_id;
  std::string deployment_id;
  double t_request_ms = 0.0;
  bool hooked = false;  // session_start fired; finalize must fire session_end
  std::vector<TokenEvent> events;
  StreamSink sink;
};

Gateway::Gateway(Catalog catalog, Scheduler& scheduler, const Rng& rng,
                 Config config)
    : catalog_(std::move(catalog)),
      scheduler_(scheduler),
      config_(std::move(config)),
      plans_(catalog_),
      telemetry_(config_.telemetry_alpha),
      backend_(scheduler, rng.child("backend")),
      ledger_(config_.data_dir / "ledger.jsonl"),
      payments_(config_.data_dir / "receipts.jsonl"),
      usage_dir_(config_.data_dir / "usage") {
  config_.latency_bounds.validate();
  std::filesystem::create_directories(usage_dir_);
  for (const DeploymentDescriptor& d : catalog_.list_deployments()) {
    telemetry_.init_from(d);
    if (!config_.upstream_endpoints.count(d.deployment_id)) {
      backend_.add_deployment(d, config_.natural_output_dist);
    }
  }
  // Recover previously metered usage (restart / offline billing).
  std::vector<std::filesystem::path> usage_files;
  for (const auto& entry : std::filesystem::directory_iterator(usage_dir_)) {
    if (entry.path().extension() == ".jsonl") usage_files.push_back(entry.path());
  }
  std::sort(usage_files.begin(), usage_files.end());
  for (const auto& file : usage_files) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(Errc::storage_corrupt, file.string());
      usage_.push_back(usage_from_json(j));
    }
  }
}

SubmitOutcome Gateway::submit(const GenerationRequest& request, StreamSink sink) {
  auto reject_with = [&](TerminalEvent::Kind kind, RejectReason reason,
                         int status, std::string message) {
    TerminalEvent terminal;
    terminal.kind = kind;
    terminal.reject_reason = reason;
    terminal.http_status = status;
    terminal.message = std::move(message);
    if (sink.on_terminal) sink.on_terminal(terminal);
    stats_.rejected += 1;
    if (kind == TerminalEvent::Kind::rejected && on_reject) {
      on_reject(request, reason);
    }
    return SubmitOutcome{false, status, nullptr};
  };

  try {
    request.validate();
  } catch (const Error& e) {
    return reject_with(TerminalEvent::Kind::error, RejectReason::auth_failed,
                       400, e.what());
  }

  // authenticate
  auto plan = plans_.authenticate(request.api_key, request.tenant_id);
  if (!plan) {
    return reject_with(TerminalEvent::Kind::rejected, RejectReason::auth_failed,
                       401, "authentication failed");
  }

  // unknown model is a protocol-level 404, distinct from plan rejections
  auto model = catalog_.lookup_model(request.target_model_id);
  if (!model) {
    return reject_with(TerminalEvent::Kind::error, RejectReason::site_unavailable,
                       404, "unknown model " + request.target_model_id);
  }

  // admit: reserve quota or reject with a machine-readable reason
  Admission admission = plans_.admit(request);
  if (!admission.admitted) {
    int status = admission.reason == RejectReason::auth_failed ? 401 : 403;
    return reject_with(TerminalEvent::Kind::rejected, admission.reason, status,
                       reject_reason_name(admission.reason));
  }

  // collaborative models dispatch to a submodel before deployment selection
  std::string resolved_id = request.target_model_id;
  if (model->kind == ModelKind::collaborative) {
    resolved_id = resolve_collaborative(*model, request);
  }
  auto resolved = catalog_.lookup_model(resolved_id);
  if (!resolved) {
    plans_.settle_reservation(admission.reservation_id, 0);
    return reject_with(TerminalEvent::Kind::error, RejectReason::site_unavailable,
                       500, "collaborative table references missing model");
  }

  auto decision = select_deployment(
      request, *resolved, catalog_.candidates(resolved_id), telemetry_, *plan,
      [this](const std::string& id) {
        return backend_.has_deployment(id) ? backend_.active_streams(id) : 0;
      });
  if (!decision) {
    // Reservation was taken; release it before surfacing the rejection.
    plans_.settle_reservation(admission.reservation_id, 0);
    return reject_with(TerminalEvent::Kind::rejected,
                       RejectReason::site_unavailable, 403,
                       "no deployment available");
  }
  if (on_route) on_route(*decision);

  auto ctx = std::make_shared<SessionContext>();
  ctx->request = request;
  ctx->reservation_id = admission.reservation_id;
  ctx->resolved_model_id = resolved_id;
  ctx->deployment_id = decision->chosen_deployment_id;
  ctx->t_request_ms = scheduler_.now_ms();
  ctx->sink = std::move(sink);

  stats_.accepted += 1;

  SessionCallbacks callbacks;
  callbacks.on_token = [this, ctx](const TokenEvent& raw) {
    TokenEvent event = raw;
    event.payload_bytes = wire_token_line_length(event, ctx->t_request_ms);
    ctx->events.push_back(event);
    if (ctx->sink.on_token) ctx->sink.on_token(event);
  };
  callbacks.on_done = [this, ctx](const SessionTiming& timing, bool cancelled) {
    finalize_session(ctx, timing, cancelled);
  };

  auto endpoint = config_.upstream_endpoints.find(ctx->deployment_id);
  if (endpoint != config_.upstream_endpoints.end()) {
    // Upstream-backed deployment: stream synchronously on this thread.
    UpstreamStatus status = real_endpoint_stream(
        endpoint->second, request, [this] { return scheduler_.now_ms(); },
        callbacks);
    if (status.outcome == UpstreamOutcome::error ||
        status.outcome == UpstreamOutcome::timeout) {
      // No tokens flowed and on_done never fired: release the reservation and
      // surface the upstream failure as this session's terminal.
      plans_.settle_reservation(admission.reservation_id, 0);
      TerminalEvent terminal;
      terminal.kind = TerminalEvent::Kind::error;
      terminal.http_status = status.http_status >= 400 ? 502 : 504;
      terminal.message = status.detail;
      if (ctx->sink.on_terminal) ctx->sink.on_terminal(terminal);
      {
        std::lock_guard guard(sessions_mutex_);
        live_sessions_.erase(request.request_id);
      }
      return SubmitOutcome{false, terminal.http_status, nullptr};
    }
    return SubmitOutcome{true, 200, nullptr};
  }

  // Simulator-backed session: the start/end observability hooks bracket its
  // time in system (submission through completion), queue wait included.
  ctx->hooked = true;
  if (on_session_start) on_session_start(request);
  auto session = backend_.spawn_stream(ctx->deployment_id, request, callbacks);
  {
    std::lock_guard guard(sessions_mutex_);
    live_sessions_[request.request_id] = session;
  }
  return SubmitOutcome{true, 200, session};
}

void Gateway::finalize_session(const std::shared_ptr<SessionContext>& ctx,
                               const SessionTiming& timing, bool cancelled) {
  UsageRecord usage = meter_stream(ctx->events, ctx->request, timing,
                                   ctx->resolved_model_id, ctx->deployment_id);
  plans_.settle_reservation(ctx->reservation_id, int64_t(usage.output_tokens));
  append_usage(usage);
  ledger_.append(usage);
  if (usage.tft_ms > 0.0 && usage.mean_itt_ms > 0.0) {
    telemetry_.update(ctx->deployment_id, usage.tft_ms, usage.mean_itt_ms);
  }
  {
    std::lock_guard guard(sessions_mutex_);
    live_sessions_.erase(ctx->request.request_id);
  }
  if (cancelled) {
    stats_.cancelled += 1;
  } else {
    stats_.completed += 1;
  }
  if (ctx->hooked && on_session_end) on_session_end(ctx->request, usage, cancelled);

  TerminalEvent terminal;
  terminal.kind = cancelled ? TerminalEvent::Kind::cancelled : TerminalEvent::Kind::done;
  terminal.http_status = 200;
  terminal.usage = usage;
  if (ctx->sink.on_terminal) ctx->sink.on_terminal(terminal);
}

void Gateway::append_usage(const UsageRecord& usage) {
  std::lock_guard guard(usage_mutex_);
  usage_.push_back(usage);
  std::filesystem::path file = usage_dir_ / (day_of_ms(usage.t_start_ms) + ".jsonl");
  std::ofstream out(file, std::ios::app);
  out << usage_to_json(usage).dump() << "\n";
}

void Gateway::cancel_active_sessions() {
  std::vector<std::shared_ptr<SimSession>> sessions;
  {
    std::lock_guard guard(sessions_mutex_);
    for (auto& [_, weak] : live_sessions_) {
      if (auto s = weak.lock()) sessions.push_back(std::move(s));
    }
  }
  for (auto& s : sessions) s->cancel();
}

size_t Gateway::active_sessions() const {
  std::lock_guard guard(sessions_mutex_);
  size_t live = 0;
  for (const auto& [_, weak] : live_sessions_) {
    if (!weak.expired()) live += 1;
  }
  return live;
}

std::string Gateway::admin_register_model(ModelDescriptor desc) {
  return catalog_.register_model(std::move(desc));
}

std::string Gateway::admin_register_deployment(DeploymentDescriptor desc) {
  std::string id = catalog_.register_deployment(desc);
  telemetry_.init_from(desc);
  if (!config_.upstream_endpoints.count(id)) {
    backend_.add_deployment(desc, config_.natural_output_dist);
  }
  return id;
}

std::string Gateway::admin_create_plan(Plan plan) {
  std::string id = catalog_.create_plan(plan);
  plans_.register_plan(plan);
  return id;
}

std::string Gateway::admin_create_pricing_scheme(PricingScheme scheme) {
  return catalog_.create_pricing_scheme(std::move(scheme));
}

Gateway::InvoiceBundle Gateway::build_invoice_for(const std::string& tenant_id,
                                                  const std::string& period,
                                                  bool pay_now) {
  auto plan = plans_.plan_of_tenant(tenant_id);
  if (!plan) {
    fail(Errc::dangling_reference, "no active plan for tenant " + tenant_id);
  }
  auto scheme = catalog_.lookup_pricing_scheme(plan->pricing_scheme_id);
  if (!scheme) {
    fail(Errc::dangling_reference, "scheme " + plan->pricing_scheme_id);
  }

  std::vector<UsageRecord> records = usage_for(tenant_id, period);
  InvoiceBundle bundle;
  bundle.invoice = build_invoice(tenant_id, period, records, *scheme);
  ledger_.append(bundle.invoice);
  bundle.shares = allocate_shares(bundle.invoice, scheme->share_splits_ppm);
  ledger_.append(bundle.shares);
  if (pay_now) {
    bundle.receipt = payments_.pay(bundle.invoice);
    ledger_.append(*bundle.receipt);
  }

  std::filesystem::path invoices_dir = config_.data_dir / "invoices";
  std::filesystem::create_directories(invoices_dir);
  json doc{{"invoice", invoice_to_json(bundle.invoice)},
           {"shares", shares_to_json(bundle.shares)}};
  if (bundle.receipt) doc["receipt"] = receipt_to_json(*bundle.receipt);
  std::ofstream out(invoices_dir / (bundle.invoice.invoice_id + ".json"));
  out << doc.dump(2) << "\n";
  return bundle;
}

std::vector<UsageRecord> Gateway::usage_for(const std::string& tenant_id,
                                            const std::string& period) const {
  std::lock_guard guard(usage_mutex_);
  std::vector<UsageRecord> out;
  for (const UsageRecord& u : usage_) {
    if (u.tenant_id == tenant_id && period_of_ms(u.t_start_ms) == period) {
      out.push_back(u);
    }
  }
  return out;
}

std::vector<UsageRecord> Gateway::all_usage() const {
  std::lock_guard guard(usage_mutex_);
  return usage_;
}

}  // namespace aigw
