#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aigw/gateway.hpp"
#include "aigw/workload.hpp"

namespace aigw {

struct StatSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double p50 = 0.0;  // nearest-rank percentiles
  double p95 = 0.0;
};

// Throws EmptySample on an empty input.
StatSummary summarize(std::vector<double> samples_ms);

struct LittleLawCheck {
  double lambda = 0.0;        // configured arrival rate (req/s)
  double w_measured_s = 0.0;  // mean background sojourn in the window
  double l_predicted = 0.0;   // lambda * w_measured_s
  double l_measured = 0.0;    // time-averaged background concurrency
  double relative_error = 0.0;
};

struct ProbeRow {
  std::string request_id;
  int64_t probe_index = 0;
  double t_request_ms = 0.0;  // absolute submission instant
  double t_done_ms = 0.0;     // absolute completion instant
  std::vector<double> token_t_rel_ms;  // per emitted token
};

struct BenchReport {
  std::string scenario;
  std::string mode;  // "virtual" | "real"
  uint64_t seed = 0;
  StatSummary tft_ms;
  StatSummary itt_ms;
  double mean_concurrency = 0.0;
  uint64_t background_requests = 0;
  LittleLawCheck little_law;
  double runtime_wall_s = 0.0;

  std::string to_json_text() const;
};

struct BenchArtifacts {
  BenchReport report;
  std::vector<ProbeRow> probe_rows;
  std::filesystem::path report_path;
  std::filesystem::path per_token_csv_path;
  std::filesystem::path summary_csv_path;
};

// Deterministic virtual-time reproduction of the probe experiment: installs
// the scenario world into a fresh catalog under <out_dir>/data, applies the
// background load, waits out the first 10% of duration_s as warm-up, then
// drives the probes strictly sequentially through the full gateway pipeline.
// Background arrivals continue until the probe phase completes (or until
// duration_s when the scenario has no probe); in-flight sessions drain
// before the run ends. Artifacts: report.json, per_token.csv, summary.csv.
BenchArtifacts run_case_study(const ScenarioConfig& scenario, uint64_t seed,
                              const std::filesystem::path& out_dir);

// Sequential probes against a live HTTP gateway (wall-clock timing), same
// artifact formats. Background load is driven over the wire as well.
BenchArtifacts run_case_study_real(const ScenarioConfig& scenario, uint64_t seed,
                                   const std::string& endpoint_base_url,
                                   const std::filesystem::path& out_dir);

void write_per_token_csv(const std::filesystem::path& path,
                         const std::vector<ProbeRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const StatSummary& tft,
                       const StatSummary& itt);

}  // namespace aigw
