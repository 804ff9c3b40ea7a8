#include "aigw/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>

#include <sys/socket.h>

#include "aigw/json_io.hpp"
#include "httplib.h"

namespace aigw {

using nlohmann::json;

namespace {

// Hands events from gateway callbacks (scheduler thread) to the HTTP
// handler thread writing the chunked response.
class EventQueue {
 public:
  void push(std::string line) {
    {
      std::lock_guard guard(mutex_);
      lines_.push_back(std::move(line));
    }
    cv_.notify_one();
  }

  void close() {
    {
      std::lock_guard guard(mutex_);
      closed_ = true;
    }
    cv_.notify_one();
  }

  // Blocks for the next line; empty optional means the stream ended.
  std::optional<std::string> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return closed_ || !lines_.empty(); });
    if (lines_.empty()) return std::nullopt;
    std::string line = std::move(lines_.front());
    lines_.pop_front();
    return line;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool closed_ = false;
};

GenerationRequest request_from_json(const json& j, uint64_t fallback_id) {
  GenerationRequest request;
  request.request_id = j.value("request_id", "");
  if (request.request_id.empty()) {
    request.request_id = "req-" + std::to_string(fallback_id);
  }
  request.tenant_id = j.value("tenant_id", "");
  request.api_key = j.value("api_key", "");
  request.target_model_id = j.value("model_id", "");
  if (j.contains("prompt_text")) {
    request.prompt_text = j["prompt_text"].get<std::string>();
  }
  if (j.contains("prompt_tokens")) {
    request.prompt_tokens = j["prompt_tokens"].get<int64_t>();
  }
  request.max_output_tokens = j.value("max_output_tokens", int64_t(1));
  request.stream = j.value("stream", true);
  request.ignore_eos = j.value("ignore_eos", false);
  request.latency_class =
      latency_class_from_name(j.value("latency_class", "standard"));
  if (j.contains("category_tag")) {
    request.category_tag = j["category_tag"].get<std::string>();
  }
  return request;
}

json error_body(const std::string& reason) {
  return json{{"error", reason}};
}

template <typename Fn>
void handle_admin(httplib::Response& res, Fn&& fn) {
  try {
    json out = fn();
    res.set_content(out.dump(), "application/json");
  } catch (const std::exception& e) {
    res.status = 400;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  }
}

}  // namespace

struct GatewayServer::Impl {
  httplib::Server server;
  std::atomic<uint64_t> request_counter{0};
  std::atomic<bool> running{false};
};

GatewayServer::GatewayServer(Gateway& gateway, std::string host, int port)
    : impl_(std::make_unique<Impl>()),
      gateway_(gateway),
      host_(std::move(host)),
      port_(port) {
  httplib::Server& server = impl_->server;

  // SO_REUSEADDR only: a second gateway on the same port must fail to bind,
  // not silently share the listener (httplib would otherwise set SO_REUSEPORT).
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR,
               reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });

  server.Post("/v1/generate", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      res.status = 400;
      res.set_content(error_body("invalid JSON body").dump(), "application/json");
      return;
    }
    GenerationRequest request;
    try {
      request = request_from_json(body, impl_->request_counter.fetch_add(1));
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(error_body(e.what()).dump(), "application/json");
      return;
    }

    auto queue = std::make_shared<EventQueue>();
    auto rejected_status = std::make_shared<std::atomic<int>>(0);
    auto reject_line = std::make_shared<std::string>();
    double t_request = gateway_.scheduler().now_ms();

    StreamSink sink;
    sink.on_token = [queue, t_request](const TokenEvent& event) {
      queue->push(wire_token_line(event, t_request));
    };
    sink.on_terminal = [queue, rejected_status, reject_line](const TerminalEvent& terminal) {
      if (terminal.kind == TerminalEvent::Kind::rejected ||
          terminal.kind == TerminalEvent::Kind::error) {
        rejected_status->store(terminal.http_status);
        *reject_line = wire_terminal_line(terminal);
      } else {
        queue->push(wire_terminal_line(terminal));
      }
      queue->close();
    };

    SubmitOutcome outcome = gateway_.submit(request, std::move(sink));
    if (!outcome.accepted) {
      // Rejection terminals were delivered synchronously.
      res.status = rejected_status->load() > 0 ? rejected_status->load() : 500;
      res.set_content(*reject_line, "application/json");
      return;
    }

    auto session = outcome.session;
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [queue, session](size_t, httplib::DataSink& data_sink) {
          for (;;) {
            auto line = queue->pop();
            if (!line) break;
            if (!data_sink.write(line->data(), line->size())) {
              // Client went away; cancel and let the pipeline meter the
              // partial stream.
              if (session) session->cancel();
              return false;
            }
          }
          data_sink.done();
          return false;
        });
  });

  // --- admin: catalog -------------------------------------------------------
  server.Post("/v1/models", [this](const httplib::Request& req, httplib::Response& res) {
    handle_admin(res, [&] {
      json j = json::parse(req.body);
      ModelDescriptor m;
      m.model_id = j.at("model_id").get<std::string>();
      m.kind = model_kind_from_name(j.value("kind", "standalone"));
      m.provider_id = j.value("provider_id", "");
      if (j.contains("base_model_id")) m.base_model_id = j["base_model_id"].get<std::string>();
      if (j.contains("adapter_id")) m.adapter_id = j["adapter_id"].get<std::string>();
      if (j.contains("adapter_owner_id")) m.adapter_owner_id = j["adapter_owner_id"].get<std::string>();
      if (j.contains("submodel_table")) {
        m.submodel_table = j["submodel_table"].get<std::map<std::string, std::string>>();
      }
      if (j.contains("partition_count")) m.partition_count = j["partition_count"].get<int64_t>();
      m.expected_output_tokens = j.value("expected_output_tokens", 1.0);
      m.pricing_scheme_id = j.value("pricing_scheme_id", "");
      return json{{"model_id", gateway_.admin_register_model(std::move(m))}};
    });
  });

  server.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const ModelDescriptor& m : gateway_.catalog().list_models()) {
      out.push_back(json{{"model_id", m.model_id},
                         {"kind", model_kind_name(m.kind)},
                         {"provider_id", m.provider_id},
                         {"expected_output_tokens", m.expected_output_tokens},
                         {"pricing_scheme_id", m.pricing_scheme_id}});
    }
    res.set_content(json{{"models", out}}.dump(), "application/json");
  });

  server.Post("/v1/deployments", [this](const httplib::Request& req,
                                        httplib::Response& res) {
    handle_admin(res, [&] {
      json j = json::parse(req.body);
      DeploymentDescriptor d;
      d.deployment_id = j.at("deployment_id").get<std::string>();
      d.model_id = j.at("model_id").get<std::string>();
      d.site = site_from_name(j.value("site", "edge"));
      const json& p = j.at("perf_profile");
      d.perf.tft_base_ms = p.at("tft_base_ms").get<double>();
      d.perf.tft_jitter_ms = p.value("tft_jitter_ms", 0.0);
      d.perf.itt_base_ms = p.at("itt_base_ms").get<double>();
      d.perf.itt_jitter_ms = p.value("itt_jitter_ms", 0.0);
      d.perf.batch_capacity = p.at("batch_capacity").get<int64_t>();
      d.perf.hard_admission_limit = p.at("hard_admission_limit").get<int64_t>();
      d.gpu_count = j.value("gpu_count", int64_t(1));
      return json{{"deployment_id", gateway_.admin_register_deployment(std::move(d))}};
    });
  });

  server.Get("/v1/deployments", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const DeploymentDescriptor& d : gateway_.catalog().list_deployments()) {
      out.push_back(json{{"deployment_id", d.deployment_id},
                         {"model_id", d.model_id},
                         {"site", site_name(d.site)}});
    }
    res.set_content(json{{"deployments", out}}.dump(), "application/json");
  });

  server.Post("/v1/plans", [this](const httplib::Request& req, httplib::Response& res) {
    handle_admin(res, [&] {
      json j = json::parse(req.body);
      Plan p;
      p.plan_id = j.at("plan_id").get<std::string>();
      p.tenant_id = j.at("tenant_id").get<std::string>();
      p.api_key = j.at("api_key").get<std::string>();
      for (const auto& c : j.at("allowed_latency_classes")) {
        p.allowed_latency_classes.insert(latency_class_from_name(c.get<std::string>()));
      }
      for (const auto& s : j.at("allowed_sites")) {
        p.allowed_sites.insert(site_from_name(s.get<std::string>()));
      }
      p.max_tokens_per_request = j.at("max_tokens_per_request").get<int64_t>();
      p.monthly_token_quota = j.at("monthly_token_quota").get<int64_t>();
      p.pricing_scheme_id = j.at("pricing_scheme_id").get<std::string>();
      p.active = j.value("active", true);
      return json{{"plan_id", gateway_.admin_create_plan(std::move(p))}};
    });
  });

  server.Get("/v1/plans", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const Plan& p : gateway_.catalog().list_plans()) {
      out.push_back(json{{"plan_id", p.plan_id},
                         {"tenant_id", p.tenant_id},
                         {"active", p.active},
                         {"monthly_token_quota", p.monthly_token_quota}});
    }
    res.set_content(json{{"plans", out}}.dump(), "application/json");
  });

  server.Post("/v1/pricing", [this](const httplib::Request& req, httplib::Response& res) {
    handle_admin(res, [&] {
      json j = json::parse(req.body);
      PricingScheme s;
      s.scheme_id = j.at("scheme_id").get<std::string>();
      s.variant = pricing_variant_from_name(j.at("variant").get<std::string>());
      s.flat_per_call = Money(j.value("flat_per_call_u", int64_t(0)));
      s.rate_in_per_token = Money(j.value("rate_in_per_token_u", int64_t(0)));
      s.rate_out_per_token = Money(j.value("rate_out_per_token_u", int64_t(0)));
      s.rate_gpu_second = Money(j.value("rate_gpu_second_u", int64_t(0)));
      s.rate_egress_byte = Money(j.value("rate_egress_byte_u", int64_t(0)));
      s.monthly_fee = Money(j.value("monthly_fee_u", int64_t(0)));
      s.included_tokens = j.value("included_tokens", int64_t(0));
      s.overage_rate_out = Money(j.value("overage_rate_out_u", int64_t(0)));
      s.share_splits_ppm = j.at("share_splits_ppm").get<std::map<std::string, int64_t>>();
      return json{{"scheme_id", gateway_.admin_create_pricing_scheme(std::move(s))}};
    });
  });

  server.Get("/v1/usage", [this](const httplib::Request& req, httplib::Response& res) {
    std::string tenant = req.get_param_value("tenant");
    std::string period = req.get_param_value("period");
    json out = json::array();
    for (const UsageRecord& u : gateway_.usage_for(tenant, period)) {
      out.push_back(usage_to_json(u));
    }
    res.set_content(json{{"usage", out}}.dump(), "application/json");
  });

  server.Post("/v1/invoices/build", [this](const httplib::Request& req,
                                           httplib::Response& res) {
    handle_admin(res, [&] {
      json j = json::parse(req.body);
      auto bundle = gateway_.build_invoice_for(j.at("tenant_id").get<std::string>(),
                                               j.at("period").get<std::string>(),
                                               j.value("pay", false));
      json out{{"invoice", invoice_to_json(bundle.invoice)},
               {"shares", shares_to_json(bundle.shares)}};
      if (bundle.receipt) out["receipt"] = receipt_to_json(*bundle.receipt);
      return out;
    });
  });

  server.Get("/v1/ledger/verify", [this](const httplib::Request&, httplib::Response& res) {
    LedgerVerifyResult result = gateway_.ledger().verify();
    json j{{"valid", result.valid}, {"entries", result.entry_count}};
    if (result.first_bad_seq) j["first_bad_seq"] = *result.first_bad_seq;
    res.set_content(j.dump(), "application/json");
  });
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  httplib::Server& server = impl_->server;
  if (port_ == 0) {
    port_ = server.bind_to_any_port(host_);
    if (port_ <= 0) fail(Errc::bind_failure, host_);
  } else if (!server.bind_to_port(host_, port_)) {
    fail(Errc::bind_failure, host_ + ":" + std::to_string(port_));
  }
  impl_->running = true;
  serve_thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
}

void GatewayServer::stop() {
  if (!impl_->running.exchange(false)) return;
  // Cancel in-flight sessions; their partial usage is metered before the
  // listener goes down.
  gateway_.cancel_active_sessions();
  for (int i = 0; i < 200 && gateway_.active_sessions() > 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  impl_->server.stop();
  if (serve_thread_.joinable()) serve_thread_.join();
}

bool GatewayServer::running() const { return impl_->running.load(); }

}  // namespace aigw
