#include "aigw/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "httplib.h"
#include "json.hpp"

namespace aigw {

using nlohmann::json;

StatSummary summarize(std::vector<double> samples_ms) {
  if (samples_ms.empty()) fail(Errc::empty_sample, "summarize");
  StatSummary out;
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  out.mean = sum / double(samples_ms.size());

  double sq = 0.0;
  for (double v : samples_ms) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / double(samples_ms.size()));

  std::sort(samples_ms.begin(), samples_ms.end());
  auto nearest_rank = [&](double pct) {
    size_t rank = size_t(std::ceil(pct / 100.0 * double(samples_ms.size())));
    if (rank == 0) rank = 1;
    return samples_ms[rank - 1];
  };
  out.p50 = nearest_rank(50.0);
  out.p95 = nearest_rank(95.0);
  return out;
}

std::string BenchReport::to_json_text() const {
  auto stat = [](const StatSummary& s) {
    return json{{"mean", s.mean}, {"std", s.std}, {"p50", s.p50}, {"p95", s.p95}};
  };
  json j{{"scenario", scenario},
         {"mode", mode},
         {"seed", seed},
         {"probe", {{"tft_ms", stat(tft_ms)}, {"itt_ms", stat(itt_ms)}}},
         {"background",
          {{"mean_concurrency", mean_concurrency},
           {"request_count", background_requests}}},
         {"little_law_check",
          {{"lambda", little_law.lambda},
           {"W_measured_s", little_law.w_measured_s},
           {"L_predicted", little_law.l_predicted},
           {"L_measured", little_law.l_measured},
           {"relative_error", little_law.relative_error}}}};
  return j.dump(2);
}

void write_per_token_csv(const std::filesystem::path& path,
                         const std::vector<ProbeRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  out << "request_id,probe_index,token_index,t_rel_ms\n";
  char buf[64];
  for (const ProbeRow& row : rows) {
    for (size_t k = 0; k < row.token_t_rel_ms.size(); ++k) {
      std::snprintf(buf, sizeof(buf), ",%lld,%zu,%.3f\n",
                    static_cast<long long>(row.probe_index), k,
                    row.token_t_rel_ms[k]);
      out << row.request_id << buf;
    }
  }
}

void write_summary_csv(const std::filesystem::path& path, const StatSummary& tft,
                       const StatSummary& itt) {
  std::ofstream out(path, std::ios::trunc);
  out << "metric,mean_ms,std_ms,p50_ms,p95_ms\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "tft,%.6f,%.6f,%.6f,%.6f\n", tft.mean, tft.std,
                tft.p50, tft.p95);
  out << buf;
  std::snprintf(buf, sizeof(buf), "itt,%.6f,%.6f,%.6f,%.6f\n", itt.mean, itt.std,
                itt.p50, itt.p95);
  out << buf;
}

namespace {

// Time-weighted concurrency integrator over the background session count.
class ConcurrencyTracker {
 public:
  void on_start(double now_ms) {
    advance(now_ms);
    count_ += 1;
  }
  void on_end(double now_ms) {
    advance(now_ms);
    count_ -= 1;
  }
  double integral_at(double now_ms) {
    advance(now_ms);
    return integral_;
  }
  int64_t count() const { return count_; }

 private:
  void advance(double now_ms) {
    if (now_ms > last_ms_) {
      integral_ += double(count_) * (now_ms - last_ms_);
      last_ms_ = now_ms;
    }
  }

  double last_ms_ = 0.0;
  double integral_ = 0.0;
  int64_t count_ = 0;
};

constexpr const char* kBenchSchemeId = "scheme-bench";
constexpr const char* kBackgroundTenant = "tenant-bg";
constexpr const char* kBackgroundKey = "key-bg";
constexpr const char* kProbeTenant = "tenant-probe";
constexpr const char* kProbeKey = "key-probe";

Catalog build_world(const ScenarioConfig& scenario) {
  Catalog catalog;

  PricingScheme scheme;
  scheme.scheme_id = kBenchSchemeId;
  scheme.variant = PricingVariant::per_token;
  scheme.rate_in_per_token = Money(10);
  scheme.rate_out_per_token = Money(20);
  scheme.share_splits_ppm = {{"operator", 700000}, {"provider", 300000}};
  catalog.create_pricing_scheme(scheme);

  ModelDescriptor model;
  model.model_id = scenario.world.model_id;
  model.kind = ModelKind::standalone;
  model.provider_id = "provider-bench";
  model.expected_output_tokens = scenario.world.expected_output_tokens;
  model.pricing_scheme_id = kBenchSchemeId;
  catalog.register_model(model);

  for (const DeploymentDescriptor& d : scenario.world.deployments) {
    catalog.register_deployment(d);
  }

  auto make_plan = [&](const std::string& plan_id, const std::string& tenant,
                       const std::string& key) {
    Plan plan;
    plan.plan_id = plan_id;
    plan.tenant_id = tenant;
    plan.api_key = key;
    plan.allowed_latency_classes = {LatencyClass::realtime, LatencyClass::interactive,
                                    LatencyClass::standard, LatencyClass::batch};
    plan.allowed_sites = {Site::edge, Site::cloud};
    plan.max_tokens_per_request = 1 << 20;
    plan.monthly_token_quota = int64_t(1) << 50;
    plan.pricing_scheme_id = kBenchSchemeId;
    catalog.create_plan(plan);
  };
  make_plan("plan-bg", kBackgroundTenant, kBackgroundKey);
  make_plan("plan-probe", kProbeTenant, kProbeKey);
  return catalog;
}

GenerationRequest make_probe_request(const ScenarioConfig& scenario,
                                     int64_t index) {
  char id[32];
  std::snprintf(id, sizeof(id), "probe-%05lld", static_cast<long long>(index));
  GenerationRequest request;
  request.request_id = id;
  request.tenant_id = kProbeTenant;
  request.api_key = kProbeKey;
  request.target_model_id = scenario.world.model_id;
  request.prompt_tokens = scenario.probe->prompt_tokens;
  request.max_output_tokens = scenario.probe->max_output_tokens;
  request.stream = true;
  request.ignore_eos = scenario.probe->ignore_eos;
  request.latency_class = LatencyClass::standard;
  return request;
}

std::vector<double> pooled_itt(const std::vector<ProbeRow>& rows) {
  std::vector<double> gaps;
  for (const ProbeRow& row : rows) {
    for (size_t k = 1; k < row.token_t_rel_ms.size(); ++k) {
      gaps.push_back(row.token_t_rel_ms[k] - row.token_t_rel_ms[k - 1]);
    }
  }
  return gaps;
}

BenchArtifacts assemble_artifacts(const ScenarioConfig& scenario, uint64_t seed,
                                  const std::string& mode,
                                  const std::filesystem::path& out_dir,
                                  std::vector<ProbeRow> rows,
                                  double window_integral_ms, double window_ms,
                                  const std::vector<double>& sojourns_ms,
                                  uint64_t background_requests,
                                  double runtime_wall_s) {
  BenchArtifacts artifacts;
  BenchReport& report = artifacts.report;
  report.scenario = scenario.name;
  report.mode = mode;
  report.seed = seed;
  report.runtime_wall_s = runtime_wall_s;

  std::vector<double> tft_samples;
  for (const ProbeRow& row : rows) {
    if (!row.token_t_rel_ms.empty()) tft_samples.push_back(row.token_t_rel_ms.front());
  }
  if (!tft_samples.empty()) report.tft_ms = summarize(tft_samples);
  std::vector<double> itt_samples = pooled_itt(rows);
  if (!itt_samples.empty()) report.itt_ms = summarize(itt_samples);

  report.mean_concurrency = window_ms > 0.0 ? window_integral_ms / window_ms : 0.0;
  report.background_requests = background_requests;

  LittleLawCheck& little = report.little_law;
  little.lambda = scenario.arrival_rate_lambda;
  if (!sojourns_ms.empty()) {
    double sum = 0.0;
    for (double w : sojourns_ms) sum += w;
    little.w_measured_s = sum / double(sojourns_ms.size()) / 1000.0;
  }
  little.l_predicted = little.lambda * little.w_measured_s;
  little.l_measured = report.mean_concurrency;
  little.relative_error =
      little.l_predicted > 0.0
          ? std::abs(little.l_measured - little.l_predicted) / little.l_predicted
          : 0.0;

  std::filesystem::create_directories(out_dir);
  artifacts.report_path = out_dir / "report.json";
  artifacts.per_token_csv_path = out_dir / "per_token.csv";
  artifacts.summary_csv_path = out_dir / "summary.csv";
  {
    std::ofstream out(artifacts.report_path, std::ios::trunc);
    out << report.to_json_text() << "\n";
  }
  write_per_token_csv(artifacts.per_token_csv_path, rows);
  write_summary_csv(artifacts.summary_csv_path, report.tft_ms, report.itt_ms);
  artifacts.probe_rows = std::move(rows);
  return artifacts;
}

}  // namespace

BenchArtifacts run_case_study(const ScenarioConfig& scenario, uint64_t seed,
                              const std::filesystem::path& out_dir) {
  scenario.validate();
  auto wall_start = std::chrono::steady_clock::now();

  std::filesystem::path data_dir = out_dir / "data";
  std::filesystem::remove_all(data_dir);
  std::filesystem::create_directories(data_dir);

  Catalog catalog = build_world(scenario);
  catalog.attach_storage(data_dir);

  VirtualScheduler scheduler(0.0);
  Rng rng(seed);

  Gateway::Config config;
  config.data_dir = data_dir;
  config.natural_output_dist = scenario.world.natural_output_dist;
  Gateway gateway(std::move(catalog), scheduler, rng, std::move(config));

  // --- background instrumentation ------------------------------------------
  ConcurrencyTracker tracker;
  double window_start_ms = scenario.duration_s * 1000.0 * 0.10;  // warm-up skipped
  double window_end_ms = -1.0;
  double integral_at_start = 0.0;
  std::vector<double> sojourns_ms;   // sessions arriving inside the window
  uint64_t window_arrivals = 0;
  std::map<std::string, double> bg_started_at;

  gateway.on_session_start = [&](const GenerationRequest& request) {
    if (request.tenant_id != kBackgroundTenant) return;
    double now = scheduler.now_ms();
    tracker.on_start(now);
    bg_started_at[request.request_id] = now;
    if (now >= window_start_ms && (window_end_ms < 0.0 || now <= window_end_ms)) {
      window_arrivals += 1;
    }
  };
  gateway.on_session_end = [&](const GenerationRequest& request,
                               const UsageRecord&, bool) {
    if (request.tenant_id != kBackgroundTenant) return;
    double now = scheduler.now_ms();
    tracker.on_end(now);
    auto it = bg_started_at.find(request.request_id);
    if (it != bg_started_at.end()) {
      double started = it->second;
      bg_started_at.erase(it);
      if (started >= window_start_ms &&
          (window_end_ms < 0.0 || started <= window_end_ms)) {
        sojourns_ms.push_back(now - started);
      }
    }
  };

  const bool has_probe = scenario.probe.has_value();
  BackgroundGenerator generator(
      scheduler, rng.child("workload"), scenario, kBackgroundTenant,
      kBackgroundKey,
      [&](GenerationRequest&& request) {
        gateway.submit(request, StreamSink{});
      },
      /*honor_duration=*/!has_probe);
  generator.start();

  // --- probe phase ----------------------------------------------------------
  std::vector<ProbeRow> rows;
  struct ProbeDriver {
    ScenarioConfig scenario;
    Gateway* gateway;
    VirtualScheduler* scheduler;
    BackgroundGenerator* generator;
    std::vector<ProbeRow>* rows;
    ConcurrencyTracker* tracker;
    double* window_end_ms;
    double* window_end_integral;
    int64_t next_index = 0;

    void launch() {
      ProbeRow row;
      row.probe_index = next_index;
      GenerationRequest request = make_probe_request(scenario, next_index);
      row.request_id = request.request_id;
      rows->push_back(std::move(row));
      next_index += 1;

      double t_request = scheduler->now_ms();
      size_t slot = rows->size() - 1;
      (*rows)[slot].t_request_ms = t_request;
      StreamSink sink;
      sink.on_token = [this, slot, t_request](const TokenEvent& event) {
        (*rows)[slot].token_t_rel_ms.push_back(event.t_emit_ms - t_request);
      };
      sink.on_terminal = [this, slot](const TerminalEvent& terminal) {
        (*rows)[slot].t_done_ms = scheduler->now_ms();
        if (terminal.kind == TerminalEvent::Kind::rejected ||
            terminal.kind == TerminalEvent::Kind::error) {
          fail(Errc::gateway_unavailable,
               "probe rejected: " + terminal.message);
        }
        if (next_index < scenario.probe->count) {
          // Strictly sequential: the next probe starts at this one's done
          // instant, on a fresh event so the call stack unwinds first.
          scheduler->schedule_at(scheduler->now_ms(), [this] { launch(); });
        } else {
          double now = scheduler->now_ms();
          *window_end_ms = now;
          *window_end_integral = tracker->integral_at(now);
          generator->request_stop();
        }
      };
      gateway->submit(request, std::move(sink));
    }
  };

  double window_end_integral = 0.0;
  ProbeDriver driver{scenario, &gateway,  &scheduler,
                     &generator, &rows,    &tracker,
                     &window_end_ms, &window_end_integral};

  if (has_probe) {
    scheduler.schedule_at(window_start_ms, [&] {
      integral_at_start = tracker.integral_at(scheduler.now_ms());
      driver.launch();
    });
  } else {
    scheduler.schedule_at(window_start_ms, [&] {
      integral_at_start = tracker.integral_at(scheduler.now_ms());
    });
    scheduler.schedule_at(scenario.duration_s * 1000.0, [&] {
      double now = scheduler.now_ms();
      window_end_ms = now;
      window_end_integral = tracker.integral_at(now);
      generator.request_stop();
    });
  }

  scheduler.run_until_idle();

  if (window_end_ms < 0.0) {
    // Degenerate scenario (no probe, no duration end reached).
    window_end_ms = scheduler.now_ms();
    window_end_integral = tracker.integral_at(window_end_ms);
  }

  // Persist final world state so the data dir stands alone.
  gateway.plans().snapshot_quota(gateway.catalog());
  gateway.catalog().persist(data_dir);

  double runtime_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();

  return assemble_artifacts(scenario, seed, "virtual", out_dir, std::move(rows),
                            window_end_integral - integral_at_start,
                            window_end_ms - window_start_ms, sojourns_ms,
                            window_arrivals, runtime_wall_s);
}

// ---------------------------------------------------------------------------
// Real-time mode over the wire
// ---------------------------------------------------------------------------

namespace {

struct WireStreamResult {
  bool ok = false;
  int status = 0;
  std::vector<double> token_t_rel_ms;
  std::string error;
};

json request_body_json(const GenerationRequest& request) {
  json body{{"tenant_id", request.tenant_id},
            {"api_key", request.api_key},
            {"model_id", request.target_model_id},
            {"max_output_tokens", request.max_output_tokens},
            {"stream", request.stream},
            {"ignore_eos", request.ignore_eos},
            {"latency_class", latency_class_name(request.latency_class)}};
  if (request.request_id.size()) body["request_id"] = request.request_id;
  if (request.prompt_text) body["prompt_text"] = *request.prompt_text;
  if (request.prompt_tokens) body["prompt_tokens"] = *request.prompt_tokens;
  if (request.category_tag) body["category_tag"] = *request.category_tag;
  return body;
}

WireStreamResult stream_generate(const std::string& base_url,
                                 const GenerationRequest& request) {
  WireStreamResult result;
  httplib::Client client(base_url);
  client.set_read_timeout(std::chrono::seconds(300));

  auto t0 = std::chrono::steady_clock::now();
  auto now_rel_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  std::string buffer;
  httplib::Request req;
  req.method = "POST";
  req.path = "/v1/generate";
  req.set_header("Content-Type", "application/json");
  req.body = request_body_json(request).dump();
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    buffer.append(data, len);
    size_t start = 0;
    for (;;) {
      size_t nl = buffer.find('\n', start);
      if (nl == std::string::npos) break;
      std::string line = buffer.substr(start, nl - start);
      start = nl + 1;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      std::string type = j.value("type", "");
      if (type == "token") {
        result.token_t_rel_ms.push_back(now_rel_ms());
      } else if (type == "error") {
        result.error = j.value("reason", "error");
      }
    }
    buffer.erase(0, start);
    return true;
  };

  auto res = client.send(req);
  result.status = res ? res->status : 0;
  result.ok = res && res->status >= 200 && res->status < 300 && result.error.empty();
  if (!res) result.error = httplib::to_string(res.error());
  return result;
}

}  // namespace

BenchArtifacts run_case_study_real(const ScenarioConfig& scenario, uint64_t seed,
                                   const std::string& endpoint_base_url,
                                   const std::filesystem::path& out_dir) {
  scenario.validate();
  if (!scenario.probe) {
    fail(Errc::config_invalid, "real-mode bench needs a probe config");
  }
  auto wall_start = std::chrono::steady_clock::now();

  RealScheduler scheduler;
  Rng rng(seed);

  std::mutex tracker_mutex;
  ConcurrencyTracker tracker;
  std::vector<double> sojourns_ms;
  std::atomic<uint64_t> window_arrivals{0};
  std::atomic<bool> in_window{false};
  std::vector<std::thread> bg_threads;
  std::mutex bg_threads_mutex;

  BackgroundGenerator generator(
      scheduler, rng.child("workload"), scenario, kBackgroundTenant,
      kBackgroundKey,
      [&](GenerationRequest&& request) {
        double started = scheduler.now_ms();
        {
          std::lock_guard guard(tracker_mutex);
          tracker.on_start(started);
        }
        if (in_window.load()) window_arrivals.fetch_add(1);
        bool counted = in_window.load();
        std::lock_guard threads_guard(bg_threads_mutex);
        bg_threads.emplace_back([&, started, counted,
                                 request = std::move(request)]() mutable {
          stream_generate(endpoint_base_url, request);
          double ended = scheduler.now_ms();
          std::lock_guard guard(tracker_mutex);
          tracker.on_end(ended);
          if (counted) sojourns_ms.push_back(ended - started);
        });
      },
      /*honor_duration=*/false);
  generator.start();

  // Warm-up, then sequential probes.
  double warmup_ms = scenario.duration_s * 1000.0 * 0.10;
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(warmup_ms));
  double window_start = scheduler.now_ms();
  double integral_start;
  {
    std::lock_guard guard(tracker_mutex);
    integral_start = tracker.integral_at(window_start);
  }
  in_window.store(true);

  std::vector<ProbeRow> rows;
  for (int64_t k = 0; k < scenario.probe->count; ++k) {
    GenerationRequest request = make_probe_request(scenario, k);
    double t_request = scheduler.now_ms();
    WireStreamResult result = stream_generate(endpoint_base_url, request);
    if (!result.ok) {
      fail(Errc::gateway_unavailable,
           "probe " + std::to_string(k) + " failed: " + result.error);
    }
    ProbeRow row;
    row.request_id = request.request_id;
    row.probe_index = k;
    row.t_request_ms = t_request;
    row.t_done_ms = scheduler.now_ms();
    row.token_t_rel_ms = std::move(result.token_t_rel_ms);
    rows.push_back(std::move(row));
  }

  double window_end = scheduler.now_ms();
  in_window.store(false);
  generator.request_stop();
  scheduler.stop();
  {
    std::lock_guard guard(bg_threads_mutex);
    for (std::thread& t : bg_threads) t.join();
  }

  double integral_end;
  {
    std::lock_guard guard(tracker_mutex);
    integral_end = tracker.integral_at(window_end);
  }

  double runtime_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();

  return assemble_artifacts(scenario, seed, "real", out_dir, std::move(rows),
                            integral_end - integral_start,
                            window_end - window_start, sojourns_ms,
                            window_arrivals.load(), runtime_wall_s);
}

}  // namespace aigw
