#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aigw/backend.hpp"
#include "aigw/billing.hpp"
#include "aigw/catalog.hpp"
#include "aigw/ledger.hpp"
#include "aigw/metering.hpp"
#include "aigw/routing.hpp"
#include "aigw/upstream.hpp"

namespace aigw {

// Wire line for one token event, relative to the session's request time:
//   {"type":"token","index":N,"t_rel_ms":X.XXX}\n
// (with a "text" member when the token carries content). The same bytes are
// what egress metering counts, whether or not a socket is attached.
std::string wire_token_line(const TokenEvent& event, double t_request_ms);
uint64_t wire_token_line_length(const TokenEvent& event, double t_request_ms);

// Exactly one terminal per session.
struct TerminalEvent {
  enum class Kind : uint8_t { done, cancelled, rejected, error };
  Kind kind = Kind::done;
  RejectReason reject_reason = RejectReason::auth_failed;  // rejected only
  int http_status = 200;
  std::string message;
  std::optional<UsageRecord> usage;  // done and cancelled
};

std::string wire_terminal_line(const TerminalEvent& event);

struct StreamSink {
  std::function<void(const TokenEvent&)> on_token;
  std::function<void(const TerminalEvent&)> on_terminal;
};

struct SubmitOutcome {
  bool accepted = false;
  // Rejections / protocol errors (the terminal has already been delivered).
  int http_status = 200;
  std::shared_ptr<SimSession> session;  // simulated sessions only
};

struct GatewayStats {
  std::atomic<uint64_t> accepted{0};
  std::atomic<uint64_t> rejected{0};
  std::atomic<uint64_t> completed{0};
  std::atomic<uint64_t> cancelled{0};
};

// The request path of the marketplace: authenticate -> admit (reserve) ->
// resolve collaborative -> pick deployment -> stream tokens while metering ->
// settle the reservation -> usage log + audit ledger -> telemetry update.
// Rejections happen before any backend work and leave no trace beyond the
// terminal event handed to the caller.
class Gateway {
 public:
  struct Config {
    std::filesystem::path data_dir;
    double telemetry_alpha = 0.2;
    LatencyBounds latency_bounds{};
    LengthDist natural_output_dist{5.171, 1.2, 4096};
    // Deployments backed by a real chat-completion endpoint instead of the
    // simulator (serve mode only; keyed by deployment_id).
    std::map<std::string, EndpointConfig> upstream_endpoints;
  };

  Gateway(Catalog catalog, Scheduler& scheduler, const Rng& rng, Config config);

  SubmitOutcome submit(const GenerationRequest& request, StreamSink sink);

  // Cooperative cancellation of every in-flight session (shutdown drain).
  void cancel_active_sessions();
  size_t active_sessions() const;

  struct InvoiceBundle {
    Invoice invoice;
    ShareAllocation shares;
    std::optional<PaymentReceipt> receipt;
  };
  // Builds the tenant's invoice for one UTC month from stored usage, ledgers
  // invoice + allocation (+ receipt when pay_now), and exports the invoice
  // JSON document under <data_dir>/invoices/.
  InvoiceBundle build_invoice_for(const std::string& tenant_id,
                                  const std::string& period, bool pay_now);

  std::vector<UsageRecord> usage_for(const std::string& tenant_id,
                                     const std::string& period) const;
  std::vector<UsageRecord> all_usage() const;

  // Admin mutations: registered in the catalog (persisted when attached) and
  // wired into the live stores (plan quota state, simulator, telemetry).
  std::string admin_register_model(ModelDescriptor desc);
  std::string admin_register_deployment(DeploymentDescriptor desc);
  std::string admin_create_plan(Plan plan);
  std::string admin_create_pricing_scheme(PricingScheme scheme);

  Catalog& catalog() { return catalog_; }
  const Catalog& catalog() const { return catalog_; }
  PlanStore& plans() { return plans_; }
  TelemetryStore& telemetry() { return telemetry_; }
  SimulatedBackend& backend() { return backend_; }
  Ledger& ledger() { return ledger_; }
  Scheduler& scheduler() { return scheduler_; }
  const GatewayStats& stats() const { return stats_; }

  // Observability hooks (bench instrumentation, route-decision logging).
  // start/end bracket simulator-backed sessions only, always in pairs.
  std::function<void(const GenerationRequest&)> on_session_start;
  std::function<void(const GenerationRequest&, const UsageRecord&, bool cancelled)>
      on_session_end;
  std::function<void(const GenerationRequest&, RejectReason)> on_reject;
  std::function<void(const RouteDecision&)> on_route;

 private:
  struct SessionContext;

  void finalize_session(const std::shared_ptr<SessionContext>& ctx,
                        const SessionTiming& timing, bool cancelled);
  void append_usage(const UsageRecord& usage);

  Catalog catalog_;
  Scheduler& scheduler_;
  Config config_;
  PlanStore plans_;
  TelemetryStore telemetry_;
  SimulatedBackend backend_;
  Ledger ledger_;
  PaymentGateway payments_;

  mutable std::mutex usage_mutex_;
  std::vector<UsageRecord> usage_;
  std::filesystem::path usage_dir_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::weak_ptr<SimSession>> live_sessions_;

  GatewayStats stats_;
};

}  // namespace aigw
