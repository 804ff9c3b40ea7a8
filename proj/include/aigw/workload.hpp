#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aigw/admission.hpp"
#include "aigw/catalog.hpp"
#include "aigw/clock.hpp"
#include "aigw/sampling.hpp"

namespace aigw {

struct ProbeConfig {
  int64_t count = 100;
  int64_t prompt_tokens = 10;
  int64_t max_output_tokens = 1000;
  bool ignore_eos = true;
};

// World installed into a fresh catalog for a benchmark run: one target
// model served by one or more simulated deployments.
struct WorldConfig {
  std::string model_id = "model-under-test";
  double expected_output_tokens = 351.0;
  std::vector<DeploymentDescriptor> deployments;
  LengthDist natural_output_dist{5.171, 1.2, 4096};  // non-ignore_eos lengths
};

struct ScenarioConfig {
  std::string name;
  double arrival_rate_lambda = 1.0;  // background requests per second
  LengthDist input_len_dist{3.9427, 1.0, 4096};
  LengthDist output_len_dist{5.171, 1.2, 4096};
  double duration_s = 0.0;
  std::optional<int64_t> total_requests;
  uint64_t seed = 0;
  std::optional<ProbeConfig> probe;
  WorldConfig world;

  void validate() const;

  static ScenarioConfig from_json_text(const std::string& text);
  static ScenarioConfig from_file(const std::filesystem::path& path);
  std::string to_json_text() const;
};

// Shipped presets; lookup by scenario name ("case-study-8b", ...).
std::optional<ScenarioConfig> builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// Resolves a --scenario argument: builtin name first, then a file path.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

// Poisson background load: requests submitted at exponential interarrival
// times, with prompt sizes from input_len_dist and output lengths pinned via
// max_output_tokens + ignore_eos from output_len_dist. Fully deterministic
// for a fixed scenario seed.
class BackgroundGenerator {
 public:
  using SubmitFn = std::function<void(GenerationRequest&&)>;

  // honor_duration: stop scheduling arrivals past duration_s (case-study
  // runs disable this and stop the generator when the probe phase ends).
  BackgroundGenerator(Scheduler& scheduler, const Rng& scenario_rng,
                      const ScenarioConfig& scenario, std::string tenant_id,
                      std::string api_key, SubmitFn submit,
                      bool honor_duration = true);

  void start();
  void request_stop();

  uint64_t submitted() const { return submitted_; }

 private:
  void schedule_next();
  void on_arrival();

  Scheduler& scheduler_;
  ScenarioConfig scenario_;
  std::string tenant_id_;
  std::string api_key_;
  SubmitFn submit_;
  bool honor_duration_;
  Rng arrivals_rng_;
  Rng input_rng_;
  Rng output_rng_;
  double start_ms_ = 0.0;
  uint64_t submitted_ = 0;
  bool stopped_ = false;
  bool started_ = false;
};

}  // namespace aigw
