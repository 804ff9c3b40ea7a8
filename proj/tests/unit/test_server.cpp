#include <filesystem>
#include <thread>

#include "aigw/bench.hpp"
#include "aigw/server.hpp"
#include "aigw/upstream.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace aigw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "aigw-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Gateway::Config config_with_dir(const fs::path& dir) {
  Gateway::Config config;
  config.data_dir = dir;
  return config;
}

Catalog server_world(double tft_ms = 5.0, double itt_ms = 0.2) {
  Catalog cat;
  PricingScheme s;
  s.scheme_id = "scheme-1";
  s.variant = PricingVariant::per_token;
  s.rate_in_per_token = Money(10);
  s.rate_out_per_token = Money(20);
  s.share_splits_ppm = {{"operator", 1000000}};
  cat.create_pricing_scheme(s);

  ModelDescriptor m;
  m.model_id = "m-1";
  m.kind = ModelKind::standalone;
  m.provider_id = "prov";
  m.expected_output_tokens = 100.0;
  m.pricing_scheme_id = "scheme-1";
  cat.register_model(m);

  DeploymentDescriptor d;
  d.deployment_id = "d-edge";
  d.model_id = "m-1";
  d.site = Site::edge;
  d.perf = {tft_ms, 0.0, itt_ms, 0.0, 48, 64};
  d.gpu_count = 1;
  cat.register_deployment(d);

  Plan p;
  p.plan_id = "plan-a";
  p.tenant_id = "tenant-a";
  p.api_key = "key-a";
  p.allowed_latency_classes = {LatencyClass::standard};
  p.allowed_sites = {Site::edge};
  p.max_tokens_per_request = 1000;
  p.monthly_token_quota = 1000000;
  p.pricing_scheme_id = "scheme-1";
  cat.create_plan(p);
  return cat;
}

json generate_body(int64_t max_tokens, const std::string& key = "key-a") {
  return json{{"request_id", "req-http-" + std::to_string(max_tokens)},
              {"tenant_id", "tenant-a"},
              {"api_key", key},
              {"model_id", "m-1"},
              {"prompt_tokens", 10},
              {"max_output_tokens", max_tokens},
              {"stream", true},
              {"ignore_eos", true},
              {"latency_class", "standard"}};
}

struct RunningServer {
  fs::path dir;
  RealScheduler scheduler;
  Gateway gateway;
  GatewayServer server;

  explicit RunningServer(const char* name, Catalog catalog)
      : dir(fresh_dir(name)),
        gateway(std::move(catalog), scheduler, Rng(3), config_with_dir(dir)),
        server(gateway, "127.0.0.1", 0) {
    server.start();
  }
  ~RunningServer() {
    server.stop();
    scheduler.stop();  // drop stray backend events before the gateway dies
  }

  httplib::Client client() {
    httplib::Client c("127.0.0.1", server.port());
    c.set_read_timeout(std::chrono::seconds(30));
    return c;
  }
};

}  // namespace

TEST_CASE("health endpoint") {
  RunningServer rig("srv-health", server_world());
  auto res = rig.client().Get("/v1/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["status"] == "ok");
}

TEST_CASE("generate streams NDJSON and meters the session") {
  // The probe shape: 10 prompt tokens, max 1000, eos ignored -> the stream
  // carries exactly 1000 token events and one done frame.
  RunningServer rig("srv-generate", server_world(2.0, 0.05));
  auto client = rig.client();

  std::string body = generate_body(1000).dump();
  std::vector<json> events;
  std::string buffer;

  httplib::Request req;
  req.method = "POST";
  req.path = "/v1/generate";
  req.set_header("Content-Type", "application/json");
  req.body = body;
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    buffer.append(data, len);
    size_t start = 0;
    for (;;) {
      size_t nl = buffer.find('\n', start);
      if (nl == std::string::npos) break;
      events.push_back(json::parse(buffer.substr(start, nl - start)));
      start = nl + 1;
    }
    buffer.erase(0, start);
    return true;
  };
  auto res = client.send(req);
  REQUIRE(res);
  CHECK(res->status == 200);

  REQUIRE(events.size() == 1001);  // 1000 tokens + done
  for (size_t i = 0; i < 1000; ++i) {
    CHECK(events[i]["type"] == "token");
    CHECK(events[i]["index"] == i);
  }
  const json& done = events.back();
  CHECK(done["type"] == "done");
  CHECK(done["usage"]["output_tokens"] == 1000);

  // Server-side: usage recorded, ledger valid, reservation settled.
  auto usage = rig.gateway.all_usage();
  REQUIRE(usage.size() == 1);
  CHECK(usage[0].output_tokens == 1000);
  CHECK(rig.gateway.ledger().verify().valid);
  auto plan = rig.gateway.plans().lookup("plan-a");
  CHECK(plan->quota_committed == 1000);
  CHECK(plan->quota_reserved == 0);
}

TEST_CASE("wire rejections carry status and reason; no side effects") {
  RunningServer rig("srv-reject", server_world());
  auto client = rig.client();

  auto res = client.Post("/v1/generate", generate_body(25, "bad-key").dump(),
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 401);
  CHECK(json::parse(res->body)["reason"] == "AuthFailed");

  json body = generate_body(25);
  body["latency_class"] = "realtime";
  res = client.Post("/v1/generate", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 403);
  CHECK(json::parse(res->body)["reason"] == "LatencyClassNotAllowed");

  body = generate_body(25);
  body["model_id"] = "m-missing";
  res = client.Post("/v1/generate", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 404);

  CHECK(rig.gateway.all_usage().empty());
  CHECK(rig.gateway.ledger().entry_count() == 0);
  CHECK(rig.gateway.backend().sessions_spawned() == 0);
}

TEST_CASE("client disconnect cancels and meters the partial stream") {
  // Slow cadence so the server notices the closed socket mid-stream.
  RunningServer rig("srv-disconnect", server_world(5.0, 30.0));
  auto client = rig.client();

  int seen = 0;
  httplib::Request req;
  req.method = "POST";
  req.path = "/v1/generate";
  req.set_header("Content-Type", "application/json");
  req.body = generate_body(1000).dump();
  std::string buffer;
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    buffer.append(data, len);
    seen += int(std::count(buffer.begin(), buffer.end(), '\n'));
    buffer.erase();
    return seen < 5;  // hang up after ~5 token lines
  };
  (void)client.send(req);

  // The pipeline settles the partial usage shortly after the hangup.
  UsageRecord usage;
  bool recorded = false;
  for (int i = 0; i < 200; ++i) {
    auto all = rig.gateway.all_usage();
    if (!all.empty()) {
      usage = all[0];
      recorded = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  REQUIRE(recorded);
  CHECK(usage.output_tokens >= 5);
  CHECK(usage.output_tokens < 1000);

  auto plan = rig.gateway.plans().lookup("plan-a");
  CHECK(plan->quota_reserved == 0);
  CHECK(plan->quota_committed == int64_t(usage.output_tokens));
}

TEST_CASE("graceful shutdown cancels and meters in-flight sessions") {
  auto rig = std::make_unique<RunningServer>("srv-drain", server_world(5.0, 50.0));
  auto client = rig->client();

  std::thread streamer([&] {
    httplib::Request req;
    req.method = "POST";
    req.path = "/v1/generate";
    req.set_header("Content-Type", "application/json");
    req.body = generate_body(1000).dump();
    req.content_receiver = [](const char*, size_t, uint64_t, uint64_t) {
      return true;
    };
    (void)client.send(req);
  });

  // Wait for the stream to be live, then stop the server.
  for (int i = 0; i < 200 && rig->gateway.active_sessions() == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  REQUIRE(rig->gateway.active_sessions() > 0);
  rig->server.stop();
  streamer.join();

  auto usage = rig->gateway.all_usage();
  REQUIRE(usage.size() == 1);
  CHECK(usage[0].output_tokens < 1000);  // cancel-metered partial session
  auto plan = rig->gateway.plans().lookup("plan-a");
  CHECK(plan->quota_reserved == 0);
}

TEST_CASE("admin endpoints round-trip catalog entities") {
  RunningServer rig("srv-admin", server_world());
  auto client = rig.client();

  auto res = client.Post(
      "/v1/pricing",
      json{{"scheme_id", "scheme-2"},
           {"variant", "per_call"},
           {"flat_per_call_u", 5000},
           {"share_splits_ppm", {{"operator", 1000000}}}}
          .dump(),
      "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Post("/v1/models",
                    json{{"model_id", "m-2"},
                         {"kind", "standalone"},
                         {"provider_id", "prov"},
                         {"expected_output_tokens", 50.0},
                         {"pricing_scheme_id", "scheme-2"}}
                        .dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Post("/v1/deployments",
                    json{{"deployment_id", "d-2"},
                         {"model_id", "m-2"},
                         {"site", "cloud"},
                         {"perf_profile",
                          {{"tft_base_ms", 1.0},
                           {"itt_base_ms", 0.1},
                           {"batch_capacity", 4},
                           {"hard_admission_limit", 8}}}}
                        .dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Post("/v1/plans",
                    json{{"plan_id", "plan-b"},
                         {"tenant_id", "tenant-b"},
                         {"api_key", "key-b"},
                         {"allowed_latency_classes", {"standard"}},
                         {"allowed_sites", {"cloud"}},
                         {"max_tokens_per_request", 100},
                         {"monthly_token_quota", 1000},
                         {"pricing_scheme_id", "scheme-2"}}
                        .dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Get("/v1/models");
  REQUIRE(res);
  CHECK(json::parse(res->body)["models"].size() == 2);
  res = client.Get("/v1/deployments");
  CHECK(json::parse(res->body)["deployments"].size() == 2);
  res = client.Get("/v1/plans");
  CHECK(json::parse(res->body)["plans"].size() == 2);

  // Duplicate registration surfaces as a 400 with the error name.
  res = client.Post("/v1/models",
                    json{{"model_id", "m-2"},
                         {"kind", "standalone"},
                         {"provider_id", "prov"},
                         {"expected_output_tokens", 50.0},
                         {"pricing_scheme_id", "scheme-2"}}
                        .dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["error"].get<std::string>().find("DuplicateId") !=
        std::string::npos);

  // The new plan is immediately usable end to end.
  json body{{"tenant_id", "tenant-b"}, {"api_key", "key-b"},
            {"model_id", "m-2"},       {"prompt_tokens", 5},
            {"max_output_tokens", 10}, {"stream", true},
            {"ignore_eos", true},      {"latency_class", "standard"}};
  res = client.Post("/v1/generate", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
}

TEST_CASE("usage, invoice, and ledger endpoints") {
  RunningServer rig("srv-billing", server_world());
  auto client = rig.client();

  for (int i = 0; i < 2; ++i) {
    json body = generate_body(20);
    body["request_id"] = "req-b" + std::to_string(i);
    auto res = client.Post("/v1/generate", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
  }
  // Streams run in real time at ~0.2 ms cadence; settle quickly.
  for (int i = 0; i < 200 && rig.gateway.all_usage().size() < 2; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  std::string period = period_of_ms(rig.scheduler.now_ms());
  auto res = client.Get(("/v1/usage?tenant=tenant-a&period=" + period).c_str());
  REQUIRE(res);
  CHECK(json::parse(res->body)["usage"].size() == 2);

  res = client.Post("/v1/invoices/build",
                    json{{"tenant_id", "tenant-a"}, {"period", period}, {"pay", true}}
                        .dump(),
                    "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  json invoice = json::parse(res->body);
  // 2 x (10*10 + 20*20) = 1000
  CHECK(invoice["invoice"]["total_u"] == 1000);
  CHECK(invoice["receipt"]["amount_u"] == 1000);

  res = client.Get("/v1/ledger/verify");
  REQUIRE(res);
  json verify = json::parse(res->body);
  CHECK(verify["valid"] == true);
  CHECK(verify["entries"] == 5);  // 2 usage + invoice + shares + receipt
}

// ---------------------------------------------------------------------------
// Upstream adapter against a mock chat-completion endpoint
// ---------------------------------------------------------------------------

namespace {

struct MockUpstream {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit MockUpstream(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockUpstream() {
    server.stop();
    thread.join();
  }

  EndpointConfig config() const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.model_name = "mock-model";
    c.timeout_s = 5.0;
    return c;
  }
};

GenerationRequest upstream_request() {
  GenerationRequest r;
  r.request_id = "req-up";
  r.tenant_id = "tenant-a";
  r.api_key = "key-a";
  r.target_model_id = "m-1";
  r.prompt_text = "say hi";
  r.max_output_tokens = 10;
  return r;
}

double steady_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

TEST_CASE("upstream adapter: three chunks become three ordered tokens") {
  MockUpstream mock([](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    CHECK(body["stream"] == true);
    CHECK(body["model"] == "mock-model");
    res.set_content(
        "data: {\"choices\":[{\"delta\":{\"role\":\"assistant\"}}]}\n\n"
        "data: {\"choices\":[{\"delta\":{\"content\":\"Hello\"}}]}\n\n"
        "data: {\"choices\":[{\"delta\":{\"content\":\" wor\"}}]}\n\n"
        "data: {\"choices\":[{\"delta\":{\"content\":\"ld\"}}]}\n\n"
        "data: [DONE]\n\n",
        "text/event-stream");
  });

  std::vector<TokenEvent> tokens;
  SessionTiming timing;
  bool done = false, cancelled = false;
  SessionCallbacks callbacks{
      [&](const TokenEvent& ev) { tokens.push_back(ev); },
      [&](const SessionTiming& t, bool c) {
        timing = t;
        done = true;
        cancelled = c;
      }};

  UpstreamStatus status = real_endpoint_stream(mock.config(), upstream_request(),
                                               steady_ms, callbacks);
  CHECK(status.outcome == UpstreamOutcome::completed);
  REQUIRE(done);
  CHECK_FALSE(cancelled);
  REQUIRE(tokens.size() == 3);  // role prelude carries no content
  CHECK(tokens[0].text == "Hello");
  CHECK(tokens[1].text == " wor");
  CHECK(tokens[2].text == "ld");
  for (size_t i = 1; i < tokens.size(); ++i) {
    CHECK(tokens[i].t_emit_ms > tokens[i - 1].t_emit_ms);
    CHECK(tokens[i].index == i);
  }
  CHECK(timing.t_done_ms >= tokens.back().t_emit_ms);
}

TEST_CASE("upstream non-success status is preserved") {
  MockUpstream mock([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("{\"error\":\"overloaded\"}", "application/json");
  });

  bool done = false;
  SessionCallbacks callbacks{[](const TokenEvent&) {},
                             [&](const SessionTiming&, bool) { done = true; }};
  UpstreamStatus status = real_endpoint_stream(mock.config(), upstream_request(),
                                               steady_ms, callbacks);
  CHECK(status.outcome == UpstreamOutcome::error);
  CHECK(status.http_status == 503);
  CHECK_FALSE(done);  // error before any token: no session to meter
}

TEST_CASE("upstream close mid-stream surfaces as cancelled with partial tokens") {
  MockUpstream mock([](const httplib::Request&, httplib::Response& res) {
    res.set_chunked_content_provider(
        "text/event-stream", [](size_t, httplib::DataSink& sink) {
          std::string chunk =
              "data: {\"choices\":[{\"delta\":{\"content\":\"partial\"}}]}\n\n";
          sink.write(chunk.data(), chunk.size());
          // Abort without a terminator: simulates a dying upstream.
          return false;
        });
  });

  std::vector<TokenEvent> tokens;
  bool done = false, cancelled = false;
  SessionCallbacks callbacks{
      [&](const TokenEvent& ev) { tokens.push_back(ev); },
      [&](const SessionTiming&, bool c) {
        done = true;
        cancelled = c;
      }};
  UpstreamStatus status = real_endpoint_stream(mock.config(), upstream_request(),
                                               steady_ms, callbacks);
  CHECK(status.outcome == UpstreamOutcome::cancelled);
  REQUIRE(done);
  CHECK(cancelled);
  CHECK(tokens.size() == 1);
}

TEST_CASE("real-mode bench drives probes over the wire") {
  RunningServer rig("srv-real-bench", server_world(2.0, 0.1));

  ScenarioConfig sc;
  sc.name = "wire-mini";
  sc.arrival_rate_lambda = 20.0;
  sc.duration_s = 2.0;  // 200 ms warm-up
  sc.seed = 6;
  sc.output_len_dist = {std::log(8.0), 0.2, 4096};
  sc.probe = ProbeConfig{3, 10, 12, true};
  sc.world.model_id = "m-1";
  sc.world.expected_output_tokens = 8.0;
  DeploymentDescriptor d;
  d.deployment_id = "d-edge";
  d.model_id = "m-1";
  d.site = Site::edge;
  d.perf = {2.0, 0.0, 0.1, 0.0, 48, 64};
  d.gpu_count = 1;
  sc.world.deployments.push_back(d);

  // The wire bench authenticates with the world's bench tenants; the serving
  // gateway must know them.
  Plan bg_plan;
  bg_plan.plan_id = "plan-bg";
  bg_plan.tenant_id = "tenant-bg";
  bg_plan.api_key = "key-bg";
  bg_plan.allowed_latency_classes = {LatencyClass::standard};
  bg_plan.allowed_sites = {Site::edge};
  bg_plan.max_tokens_per_request = 1 << 20;
  bg_plan.monthly_token_quota = int64_t(1) << 40;
  bg_plan.pricing_scheme_id = "scheme-1";
  rig.gateway.admin_create_plan(bg_plan);
  Plan probe_plan = bg_plan;
  probe_plan.plan_id = "plan-probe";
  probe_plan.tenant_id = "tenant-probe";
  probe_plan.api_key = "key-probe";
  rig.gateway.admin_create_plan(probe_plan);

  fs::path out = fresh_dir("bench-real-out");
  std::string endpoint = "http://127.0.0.1:" + std::to_string(rig.server.port());
  BenchArtifacts artifacts = run_case_study_real(sc, 6, endpoint, out);

  CHECK(artifacts.report.mode == "real");
  REQUIRE(artifacts.probe_rows.size() == 3);
  for (const ProbeRow& row : artifacts.probe_rows) {
    CHECK(row.token_t_rel_ms.size() == 12);
  }
  CHECK(artifacts.report.tft_ms.mean > 0.0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "per_token.csv"));

  // Probes and background all went through the serving gateway's pipeline.
  CHECK(rig.gateway.all_usage().size() >= 3);
  CHECK(rig.gateway.ledger().verify().valid);
}

TEST_CASE("gateway pipeline over an upstream-backed deployment") {
  MockUpstream mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        "data: {\"choices\":[{\"delta\":{\"content\":\"a\"}}]}\n\n"
        "data: {\"choices\":[{\"delta\":{\"content\":\"b\"}}]}\n\n"
        "data: [DONE]\n\n",
        "text/event-stream");
  });

  fs::path dir = fresh_dir("gw-upstream");
  RealScheduler scheduler;
  Gateway::Config config = config_with_dir(dir);
  config.upstream_endpoints.emplace("d-edge", mock.config());
  Gateway gateway(server_world(), scheduler, Rng(3), std::move(config));

  GenerationRequest request;
  request.request_id = "req-up-1";
  request.tenant_id = "tenant-a";
  request.api_key = "key-a";
  request.target_model_id = "m-1";
  request.prompt_text = "hello";
  request.max_output_tokens = 10;
  request.latency_class = LatencyClass::standard;

  std::vector<TokenEvent> tokens;
  std::optional<TerminalEvent> terminal;
  StreamSink sink{[&](const TokenEvent& ev) { tokens.push_back(ev); },
                  [&](const TerminalEvent& t) { terminal = t; }};
  SubmitOutcome outcome = gateway.submit(request, std::move(sink));
  REQUIRE(outcome.accepted);

  // The upstream path streams synchronously: everything settled on return.
  REQUIRE(terminal.has_value());
  CHECK(terminal->kind == TerminalEvent::Kind::done);
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].text == "a");
  CHECK(tokens[1].text == "b");
  REQUIRE(terminal->usage.has_value());
  CHECK(terminal->usage->output_tokens == 2);
  CHECK(terminal->usage->deployment_id == "d-edge");

  auto plan = gateway.plans().lookup("plan-a");
  CHECK(plan->quota_committed == 2);
  CHECK(plan->quota_reserved == 0);
  CHECK(gateway.ledger().verify().valid);
  CHECK(gateway.ledger().entry_count() == 1);
  CHECK(gateway.backend().sessions_spawned() == 0);  // never hit the simulator
  scheduler.stop();
}

TEST_CASE("upstream failure releases the reservation with no usage") {
  MockUpstream mock([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("{\"error\":\"overloaded\"}", "application/json");
  });

  fs::path dir = fresh_dir("gw-upstream-err");
  RealScheduler scheduler;
  Gateway::Config config = config_with_dir(dir);
  config.upstream_endpoints.emplace("d-edge", mock.config());
  Gateway gateway(server_world(), scheduler, Rng(3), std::move(config));

  GenerationRequest request;
  request.request_id = "req-up-2";
  request.tenant_id = "tenant-a";
  request.api_key = "key-a";
  request.target_model_id = "m-1";
  request.prompt_text = "hello";
  request.max_output_tokens = 10;
  request.latency_class = LatencyClass::standard;

  std::optional<TerminalEvent> terminal;
  StreamSink sink{{}, [&](const TerminalEvent& t) { terminal = t; }};
  SubmitOutcome outcome = gateway.submit(request, std::move(sink));
  CHECK_FALSE(outcome.accepted);
  CHECK(outcome.http_status == 502);
  REQUIRE(terminal.has_value());
  CHECK(terminal->kind == TerminalEvent::Kind::error);

  auto plan = gateway.plans().lookup("plan-a");
  CHECK(plan->quota_committed == 0);
  CHECK(plan->quota_reserved == 0);
  CHECK(gateway.all_usage().empty());
  CHECK(gateway.ledger().entry_count() == 0);
  scheduler.stop();
}

TEST_CASE("binding an occupied port fails loudly") {
  RunningServer rig("srv-bind", server_world());
  fs::path dir = fresh_dir("srv-bind-2");
  RealScheduler scheduler;
  Gateway gateway(server_world(), scheduler, Rng(4), config_with_dir(dir));
  GatewayServer second(gateway, "127.0.0.1", rig.server.port());
  CHECK_THROWS_AS(second.start(), Error);
  scheduler.stop();
}
