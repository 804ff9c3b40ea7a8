#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "CLI11.hpp"
#include "aigw/bench.hpp"
#include "aigw/json_io.hpp"
#include "aigw/server.hpp"
#include "json.hpp"

namespace {

std::atomic<bool> g_stop_requested{false};

void handle_signal(int) { g_stop_requested.store(true); }

struct ServeFileConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir;
  std::map<std::string, aigw::EndpointConfig> upstreams;
};

ServeFileConfig load_serve_config(const std::string& path) {
  ServeFileConfig config;
  if (path.empty()) return config;
  std::ifstream in(path);
  if (!in) aigw::fail(aigw::Errc::config_invalid, "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    aigw::fail(aigw::Errc::config_invalid, "config is not valid JSON");
  }
  config.host = j.value("host", config.host);
  config.port = j.value("port", config.port);
  config.data_dir = j.value("data_dir", config.data_dir);
  if (j.contains("upstreams")) {
    for (auto& [deployment_id, u] : j["upstreams"].items()) {
      aigw::EndpointConfig endpoint;
      endpoint.base_url = u.at("base_url").get<std::string>();
      endpoint.path = u.value("path", endpoint.path);
      endpoint.api_key_env = u.value("api_key_env", "");
      endpoint.model_name = u.value("model_name", "");
      if (u.contains("request_template")) {
        endpoint.request_template_json = u["request_template"].dump();
      }
      endpoint.timeout_s = u.value("timeout_s", endpoint.timeout_s);
      config.upstreams.emplace(deployment_id, std::move(endpoint));
    }
  }
  return config;
}

int run_serve(const std::string& config_path, const std::string& data_dir_flag) {
  ServeFileConfig file_config = load_serve_config(config_path);
  std::filesystem::path data_dir = aigw::resolve_data_dir(
      !data_dir_flag.empty() ? data_dir_flag : file_config.data_dir);

  aigw::Catalog catalog;
  try {
    catalog = aigw::Catalog::load(data_dir);
  } catch (const aigw::Error& e) {
    std::fprintf(stderr, "ConfigInvalid: catalog in %s is unusable: %s\n",
                 data_dir.string().c_str(), e.what());
    return 2;
  }

  aigw::RealScheduler scheduler;
  aigw::Rng rng(std::random_device{}());

  aigw::Gateway::Config gw_config;
  gw_config.data_dir = data_dir;
  gw_config.upstream_endpoints = file_config.upstreams;
  aigw::Gateway gateway(std::move(catalog), scheduler, rng, std::move(gw_config));

  // Route decisions as JSON lines for offline analysis.
  std::ofstream route_log(data_dir / "route_decisions.jsonl", std::ios::app);
  gateway.on_route = [&route_log](const aigw::RouteDecision& decision) {
    route_log << aigw::route_decision_json_line(decision) << "\n";
    route_log.flush();
  };

  aigw::GatewayServer server(gateway, file_config.host, file_config.port);
  try {
    server.start();
  } catch (const aigw::Error& e) {
    std::fprintf(stderr, "BindFailure: %s\n", e.what());
    return 2;
  }
  std::printf("serving on %s:%d (data dir %s)\n", file_config.host.c_str(),
              server.port(), data_dir.string().c_str());
  std::fflush(stdout);

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop_requested.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::printf("draining active sessions...\n");
  server.stop();
  scheduler.stop();
  gateway.plans().snapshot_quota(gateway.catalog());
  gateway.catalog().persist(data_dir);
  return 0;
}

int run_bench(const std::string& scenario_arg, uint64_t seed, bool seed_set,
              const std::string& mode, const std::string& out_dir,
              const std::string& endpoint) {
  aigw::ScenarioConfig scenario = aigw::resolve_scenario(scenario_arg);
  uint64_t effective_seed = seed_set ? seed : scenario.seed;

  aigw::BenchArtifacts artifacts;
  if (mode == "virtual") {
    artifacts = aigw::run_case_study(scenario, effective_seed, out_dir);
  } else if (mode == "real") {
    artifacts = aigw::run_case_study_real(scenario, effective_seed, endpoint, out_dir);
  } else {
    std::fprintf(stderr, "unknown mode %s (expected virtual|real)\n", mode.c_str());
    return 2;
  }

  const aigw::BenchReport& report = artifacts.report;
  std::printf("scenario %s (seed %llu, %s mode)\n", report.scenario.c_str(),
              static_cast<unsigned long long>(report.seed), report.mode.c_str());
  std::printf("  probe TFT ms  mean=%.3f std=%.3f p50=%.3f p95=%.3f\n",
              report.tft_ms.mean, report.tft_ms.std, report.tft_ms.p50,
              report.tft_ms.p95);
  std::printf("  probe ITT ms  mean=%.3f std=%.3f p50=%.3f p95=%.3f\n",
              report.itt_ms.mean, report.itt_ms.std, report.itt_ms.p50,
              report.itt_ms.p95);
  std::printf("  background    mean_concurrency=%.2f requests=%llu\n",
              report.mean_concurrency,
              static_cast<unsigned long long>(report.background_requests));
  std::printf("  little's law  lambda=%.2f W=%.3fs L_pred=%.2f L_meas=%.2f err=%.3f\n",
              report.little_law.lambda, report.little_law.w_measured_s,
              report.little_law.l_predicted, report.little_law.l_measured,
              report.little_law.relative_error);
  std::printf("  wall runtime  %.2fs\n", report.runtime_wall_s);
  std::printf("artifacts: %s\n", artifacts.report_path.string().c_str());
  return 0;
}

int run_ledger_verify(const std::string& data_dir_flag) {
  std::filesystem::path data_dir = aigw::resolve_data_dir(data_dir_flag);
  aigw::LedgerVerifyResult result =
      aigw::Ledger::verify_file(data_dir / "ledger.jsonl");
  if (result.valid) {
    std::printf("ledger OK (%llu entries)\n",
                static_cast<unsigned long long>(result.entry_count));
    return 0;
  }
  std::printf("ledger INVALID, first bad seq %llu\n",
              static_cast<unsigned long long>(result.first_bad_seq.value_or(0)));
  return 1;
}

int run_invoice_build(const std::string& tenant, const std::string& period,
                      const std::string& data_dir_flag, bool pay) {
  std::filesystem::path data_dir = aigw::resolve_data_dir(data_dir_flag);
  aigw::Catalog catalog = aigw::Catalog::load(data_dir);
  aigw::VirtualScheduler scheduler;
  aigw::Rng rng(0);
  aigw::Gateway::Config config;
  config.data_dir = data_dir;
  aigw::Gateway gateway(std::move(catalog), scheduler, rng, std::move(config));

  auto bundle = gateway.build_invoice_for(tenant, period, pay);
  nlohmann::json out{{"invoice", aigw::invoice_to_json(bundle.invoice)},
                     {"shares", aigw::shares_to_json(bundle.shares)}};
  if (bundle.receipt) out["receipt"] = aigw::receipt_to_json(*bundle.receipt);
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative-service marketplace gateway and benchmark harness"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP gateway");
  std::string serve_config;
  std::string serve_data_dir;
  serve->add_option("--config", serve_config, "JSON config file");
  serve->add_option("--data-dir", serve_data_dir, "data directory (overrides config/env)");

  // bench
  auto* bench = app.add_subcommand("bench", "run a workload scenario and report TFT/ITT");
  std::string bench_scenario;
  uint64_t bench_seed = 0;
  std::string bench_mode = "virtual";
  std::string bench_out = "bench-out";
  std::string bench_endpoint = "http://127.0.0.1:8080";
  bench->add_option("--scenario", bench_scenario, "builtin name or JSON file")->required();
  auto* seed_opt = bench->add_option("--seed", bench_seed, "override the scenario seed");
  bench->add_option("--mode", bench_mode, "virtual|real")
      ->check(CLI::IsMember({"virtual", "real"}));
  bench->add_option("--out", bench_out, "artifact output directory");
  bench->add_option("--endpoint", bench_endpoint, "gateway base URL (real mode)");

  // ledger verify
  auto* ledger = app.add_subcommand("ledger", "audit ledger operations");
  ledger->require_subcommand(1);
  auto* ledger_verify = ledger->add_subcommand("verify", "recompute the hash chain");
  std::string ledger_data_dir;
  ledger_verify->add_option("--data-dir", ledger_data_dir, "data directory");

  // invoice build
  auto* invoice = app.add_subcommand("invoice", "billing operations");
  invoice->require_subcommand(1);
  auto* invoice_build = invoice->add_subcommand("build", "build a tenant's monthly invoice");
  std::string invoice_tenant, invoice_period, invoice_data_dir;
  bool invoice_pay = false;
  invoice_build->add_option("--tenant", invoice_tenant, "tenant id")->required();
  invoice_build->add_option("--period", invoice_period, "UTC month YYYY-MM")->required();
  invoice_build->add_option("--data-dir", invoice_data_dir, "data directory");
  invoice_build->add_flag("--pay", invoice_pay, "capture payment via the stub gateway");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) return run_serve(serve_config, serve_data_dir);
    if (bench->parsed()) {
      return run_bench(bench_scenario, bench_seed, seed_opt->count() > 0,
                       bench_mode, bench_out, bench_endpoint);
    }
    if (ledger_verify->parsed()) return run_ledger_verify(ledger_data_dir);
    if (invoice_build->parsed()) {
      return run_invoice_build(invoice_tenant, invoice_period, invoice_data_dir,
                               invoice_pay);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
