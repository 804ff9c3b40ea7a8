#include "aigw/workload.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace aigw {

using nlohmann::json;

void ScenarioConfig::validate() const {
  if (name.empty()) fail(Errc::config_invalid, "scenario name empty");
  if (!(arrival_rate_lambda > 0.0)) {
    fail(Errc::config_invalid, "arrival_rate_lambda must be > 0");
  }
  if (input_len_dist.cap < 1 || output_len_dist.cap < 1) {
    fail(Errc::config_invalid, "length caps must be positive");
  }
  if (!(duration_s > 0.0) && !total_requests) {
    fail(Errc::config_invalid, "scenario needs duration_s or total_requests");
  }
  if (total_requests && *total_requests < 0) {
    fail(Errc::config_invalid, "total_requests must be >= 0");
  }
  if (probe && probe->count < 1) {
    fail(Errc::config_invalid, "probe.count must be >= 1");
  }
  if (probe && (probe->prompt_tokens < 1 || probe->max_output_tokens < 1)) {
    fail(Errc::config_invalid, "probe token counts must be positive");
  }
  if (world.deployments.empty()) {
    fail(Errc::config_invalid, "world needs at least one deployment");
  }
  for (const DeploymentDescriptor& d : world.deployments) {
    aigw::validate(d);
    if (d.model_id != world.model_id) {
      fail(Errc::config_invalid,
           "deployment " + d.deployment_id + " must serve the world model");
    }
  }
  if (!(world.expected_output_tokens > 0.0)) {
    fail(Errc::config_invalid, "expected_output_tokens must be positive");
  }
}

namespace {

json dist_to_json(const LengthDist& d) {
  return json{{"mu", d.mu}, {"sigma", d.sigma}, {"cap", d.cap}};
}

LengthDist dist_from_json(const json& j) {
  return LengthDist{j.at("mu").get<double>(), j.at("sigma").get<double>(),
                    j.at("cap").get<int64_t>()};
}

json deployment_to_json(const DeploymentDescriptor& d) {
  return json{{"deployment_id", d.deployment_id},
              {"model_id", d.model_id},
              {"site", site_name(d.site)},
              {"perf_profile",
               {{"tft_base_ms", d.perf.tft_base_ms},
                {"tft_jitter_ms", d.perf.tft_jitter_ms},
                {"itt_base_ms", d.perf.itt_base_ms},
                {"itt_jitter_ms", d.perf.itt_jitter_ms},
                {"batch_capacity", d.perf.batch_capacity},
                {"hard_admission_limit", d.perf.hard_admission_limit}}},
              {"gpu_count", d.gpu_count}};
}

DeploymentDescriptor deployment_from_json(const json& j) {
  DeploymentDescriptor d;
  d.deployment_id = j.at("deployment_id").get<std::string>();
  d.model_id = j.at("model_id").get<std::string>();
  d.site = site_from_name(j.at("site").get<std::string>());
  const json& p = j.at("perf_profile");
  d.perf.tft_base_ms = p.at("tft_base_ms").get<double>();
  d.perf.tft_jitter_ms = p.at("tft_jitter_ms").get<double>();
  d.perf.itt_base_ms = p.at("itt_base_ms").get<double>();
  d.perf.itt_jitter_ms = p.at("itt_jitter_ms").get<double>();
  d.perf.batch_capacity = p.at("batch_capacity").get<int64_t>();
  d.perf.hard_admission_limit = p.at("hard_admission_limit").get<int64_t>();
  d.gpu_count = j.at("gpu_count").get<int64_t>();
  return d;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Errc::config_invalid, "scenario is not valid JSON");

  ScenarioConfig sc;
  sc.name = j.at("name").get<std::string>();
  sc.arrival_rate_lambda = j.at("arrival_rate_lambda").get<double>();
  sc.input_len_dist = dist_from_json(j.at("input_len_dist"));
  sc.output_len_dist = dist_from_json(j.at("output_len_dist"));
  if (j.contains("duration_s")) sc.duration_s = j["duration_s"].get<double>();
  if (j.contains("total_requests")) {
    sc.total_requests = j["total_requests"].get<int64_t>();
  }
  sc.seed = j.at("seed").get<uint64_t>();
  if (j.contains("probe")) {
    const json& p = j["probe"];
    ProbeConfig probe;
    probe.count = p.at("count").get<int64_t>();
    probe.prompt_tokens = p.at("prompt_tokens").get<int64_t>();
    probe.max_output_tokens = p.at("max_output_tokens").get<int64_t>();
    probe.ignore_eos = p.at("ignore_eos").get<bool>();
    sc.probe = probe;
  }
  const json& w = j.at("world");
  sc.world.model_id = w.at("model_id").get<std::string>();
  sc.world.expected_output_tokens = w.at("expected_output_tokens").get<double>();
  for (const json& d : w.at("deployments")) {
    sc.world.deployments.push_back(deployment_from_json(d));
  }
  if (w.contains("natural_output_dist")) {
    sc.world.natural_output_dist = dist_from_json(w["natural_output_dist"]);
  }
  sc.validate();
  return sc;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_invalid, "cannot open scenario " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ScenarioConfig::to_json_text() const {
  json j{{"name", name},
         {"arrival_rate_lambda", arrival_rate_lambda},
         {"input_len_dist", dist_to_json(input_len_dist)},
         {"output_len_dist", dist_to_json(output_len_dist)},
         {"seed", seed}};
  if (duration_s > 0.0) j["duration_s"] = duration_s;
  if (total_requests) j["total_requests"] = *total_requests;
  if (probe) {
    j["probe"] = json{{"count", probe->count},
                      {"prompt_tokens", probe->prompt_tokens},
                      {"max_output_tokens", probe->max_output_tokens},
                      {"ignore_eos", probe->ignore_eos}};
  }
  json deployments = json::array();
  for (const DeploymentDescriptor& d : world.deployments) {
    deployments.push_back(deployment_to_json(d));
  }
  j["world"] = json{{"model_id", world.model_id},
                    {"expected_output_tokens", world.expected_output_tokens},
                    {"deployments", deployments},
                    {"natural_output_dist", dist_to_json(world.natural_output_dist)}};
  return j.dump(2);
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (auto preset = builtin_scenario(name_or_path)) return *preset;
  return ScenarioConfig::from_file(name_or_path);
}

BackgroundGenerator::BackgroundGenerator(Scheduler& scheduler,
                                         const Rng& scenario_rng,
                                         const ScenarioConfig& scenario,
                                         std::string tenant_id,
                                         std::string api_key, SubmitFn submit,
                                         bool honor_duration)
    : scheduler_(scheduler),
      scenario_(scenario),
      tenant_id_(std::move(tenant_id)),
      api_key_(std::move(api_key)),
      submit_(std::move(submit)),
      honor_duration_(honor_duration),
      arrivals_rng_(scenario_rng.child("arrivals")),
      input_rng_(scenario_rng.child("input_len")),
      output_rng_(scenario_rng.child("output_len")) {
  if (!submit_) fail(Errc::gateway_unavailable, "no submit target");
}

void BackgroundGenerator::start() {
  if (started_) return;
  started_ = true;
  start_ms_ = scheduler_.now_ms();
  schedule_next();
}

void BackgroundGenerator::request_stop() { stopped_ = true; }

void BackgroundGenerator::schedule_next() {
  if (stopped_) return;
  if (scenario_.total_requests &&
      int64_t(submitted_) >= *scenario_.total_requests) {
    return;
  }
  double gap = next_interarrival_ms(arrivals_rng_, scenario_.arrival_rate_lambda);
  double t = scheduler_.now_ms() + gap;
  if (honor_duration_ && scenario_.duration_s > 0.0 &&
      t > start_ms_ + scenario_.duration_s * 1000.0) {
    return;
  }
  scheduler_.schedule_at(t, [this] { on_arrival(); });
}

void BackgroundGenerator::on_arrival() {
  if (stopped_) return;

  char id[32];
  std::snprintf(id, sizeof(id), "bg-%08llu",
                static_cast<unsigned long long>(submitted_));

  GenerationRequest request;
  request.request_id = id;
  request.tenant_id = tenant_id_;
  request.api_key = api_key_;
  request.target_model_id = scenario_.world.model_id;
  request.prompt_tokens = natural_length_sample(scenario_.input_len_dist, input_rng_);
  request.max_output_tokens =
      natural_length_sample(scenario_.output_len_dist, output_rng_);
  request.stream = true;
  request.ignore_eos = true;  // session length == the sampled output length
  request.latency_class = LatencyClass::standard;

  submitted_ += 1;
  submit_(std::move(request));
  schedule_next();
}

}  // namespace aigw
