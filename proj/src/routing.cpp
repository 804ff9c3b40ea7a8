#include "aigw/routing.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace aigw {

TelemetryStore::TelemetryStore(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    fail(Errc::config_invalid, "telemetry alpha must be in (0, 1]");
  }
}

void TelemetryStore::init_from(const DeploymentDescriptor& deployment) {
  std::lock_guard guard(mutex_);
  TelemetryEntry entry;
  entry.tft_ewma_ms = deployment.perf.tft_base_ms;
  entry.itt_ewma_ms = deployment.perf.itt_base_ms;
  entry.sample_count = 0;
  entry.alpha = alpha_;
  entries_[deployment.deployment_id] = entry;
}

void TelemetryStore::update(const std::string& deployment_id,
                            double observed_tft_ms,
                            double observed_mean_itt_ms) {
  if (!(observed_tft_ms > 0.0) || !(observed_mean_itt_ms > 0.0)) {
    fail(Errc::invalid_argument, "telemetry observations must be positive");
  }
  std::lock_guard guard(mutex_);
  auto it = entries_.find(deployment_id);
  if (it == entries_.end()) {
    fail(Errc::dangling_reference, "telemetry for " + deployment_id);
  }
  TelemetryEntry& e = it->second;
  e.tft_ewma_ms = e.alpha * observed_tft_ms + (1.0 - e.alpha) * e.tft_ewma_ms;
  e.itt_ewma_ms = e.alpha * observed_mean_itt_ms + (1.0 - e.alpha) * e.itt_ewma_ms;
  e.sample_count += 1;
}

TelemetryEntry TelemetryStore::get(const std::string& deployment_id) const {
  std::lock_guard guard(mutex_);
  auto it = entries_.find(deployment_id);
  if (it == entries_.end()) {
    fail(Errc::dangling_reference, "telemetry for " + deployment_id);
  }
  return it->second;
}

bool TelemetryStore::has(const std::string& deployment_id) const {
  std::lock_guard guard(mutex_);
  return entries_.count(deployment_id) > 0;
}

std::string route_decision_json_line(const RouteDecision& decision) {
  nlohmann::json predicted = nlohmann::json::object();
  for (const auto& [id, ms] : decision.predicted_latency_ms) predicted[id] = ms;
  nlohmann::json j{{"event", "route_decision"},
                   {"request_id", decision.request_id},
                   {"chosen_deployment_id", decision.chosen_deployment_id},
                   {"resolved_model_id", decision.resolved_model_id},
                   {"predicted_latency_ms", predicted}};
  return j.dump();
}

std::string resolve_collaborative(const ModelDescriptor& model,
                                  const GenerationRequest& request) {
  if (model.kind != ModelKind::collaborative) {
    fail(Errc::invalid_argument, "model is not collaborative");
  }
  if (request.category_tag) {
    auto it = model.submodel_table.find(*request.category_tag);
    if (it != model.submodel_table.end()) return it->second;
  }
  return model.submodel_table.at(kDefaultSubmodelKey);
}

double predict_latency_ms(const TelemetryEntry& telemetry, double expected_out) {
  return telemetry.tft_ewma_ms + expected_out * telemetry.itt_ewma_ms;
}

double effective_expected_out(const GenerationRequest& request,
                              const ModelDescriptor& resolved_model) {
  return std::min(double(request.max_output_tokens),
                  resolved_model.expected_output_tokens);
}

double crossover_threshold(const TelemetryEntry& low_tft,
                           const TelemetryEntry& low_itt) {
  return (low_itt.tft_ewma_ms - low_tft.tft_ewma_ms) /
         (low_tft.itt_ewma_ms - low_itt.itt_ewma_ms);
}

std::optional<RouteDecision> select_deployment(
    const GenerationRequest& request, const ModelDescriptor& resolved_model,
    const std::vector<DeploymentDescriptor>& candidates,
    const TelemetryStore& telemetry, const Plan& plan,
    const std::function<int64_t(const std::string&)>& active_streams) {
  std::vector<const DeploymentDescriptor*> eligible;
  for (const DeploymentDescriptor& d : candidates) {
    if (!plan.allowed_sites.count(d.site)) continue;
    if (active_streams && active_streams(d.deployment_id) >= d.perf.hard_admission_limit) {
      continue;
    }
    eligible.push_back(&d);
  }
  if (eligible.empty()) return std::nullopt;

  std::sort(eligible.begin(), eligible.end(),
            [](const DeploymentDescriptor* a, const DeploymentDescriptor* b) {
              return a->deployment_id < b->deployment_id;
            });

  double expected_out = effective_expected_out(request, resolved_model);
  RouteDecision decision;
  decision.request_id = request.request_id;
  decision.resolved_model_id = resolved_model.model_id;

  double best = 0.0;
  for (const DeploymentDescriptor* d : eligible) {
    double predicted = predict_latency_ms(telemetry.get(d->deployment_id), expected_out);
    decision.predicted_latency_ms.emplace_back(d->deployment_id, predicted);
    // Strict < keeps the lexicographically smallest id on ties.
    if (decision.chosen_deployment_id.empty() || predicted < best) {
      best = predicted;
      decision.chosen_deployment_id = d->deployment_id;
    }
  }
  return decision;
}

}  // namespace aigw
