#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aigw/admission.hpp"
#include "aigw/catalog.hpp"

namespace aigw {

struct TelemetryEntry {
  double tft_ewma_ms = 0.0;
  double itt_ewma_ms = 0.0;
  int64_t sample_count = 0;
  double alpha = 0.2;  // smoothing factor in (0, 1]
};

// Per-deployment latency telemetry. Seeded from the declared perf profile so
// routing is defined before the first sample arrives; updates are atomic per
// deployment, reads may be slightly stale.
class TelemetryStore {
 public:
  explicit TelemetryStore(double alpha = 0.2);

  void init_from(const DeploymentDescriptor& deployment);
  void update(const std::string& deployment_id, double observed_tft_ms,
              double observed_mean_itt_ms);
  TelemetryEntry get(const std::string& deployment_id) const;
  bool has(const std::string& deployment_id) const;

 private:
  double alpha_;
  mutable std::mutex mutex_;
  std::map<std::string, TelemetryEntry> entries_;
};

struct RouteDecision {
  std::string request_id;
  std::string chosen_deployment_id;
  std::string resolved_model_id;
  // Predicted completion latency per surviving candidate, id-ordered.
  std::vector<std::pair<std::string, double>> predicted_latency_ms;
};

std::string route_decision_json_line(const RouteDecision& decision);

// Collaborative dispatch: submodel_table[category_tag] when present, else
// the table's default entry (which the catalog guarantees exists).
std::string resolve_collaborative(const ModelDescriptor& model,
                                  const GenerationRequest& request);

// Completion-latency cost model: tft_ewma + expected_out * itt_ewma, with
// expected_out = min(request.max_output_tokens, model prior).
double predict_latency_ms(const TelemetryEntry& telemetry, double expected_out);

double effective_expected_out(const GenerationRequest& request,
                              const ModelDescriptor& resolved_model);

// Expected-output threshold at which two candidates swap rank: requests
// shorter than this favor the lower-TFT candidate, longer ones the
// lower-ITT candidate.
double crossover_threshold(const TelemetryEntry& low_tft,
                           const TelemetryEntry& low_itt);

// Picks the argmin-latency deployment among candidates on an allowed site
// and below their hard admission limit; ties break on the smaller
// deployment_id. Returns nullopt when everything is filtered out (surfaces
// as SiteUnavailable upstream).
std::optional<RouteDecision> select_deployment(
    const GenerationRequest& request, const ModelDescriptor& resolved_model,
    const std::vector<DeploymentDescriptor>& candidates,
    const TelemetryStore& telemetry, const Plan& plan,
    const std::function<int64_t(const std::string&)>& active_streams);

}  // namespace aigw
