#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aigw/domain.hpp"

namespace aigw {

enum class ModelKind : uint8_t { standalone, base_with_adapter, distributed, collaborative };
enum class Site : uint8_t { edge, cloud };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(std::string_view name);
const char* site_name(Site s);
Site site_from_name(std::string_view name);

struct PerfProfile {
  double tft_base_ms = 0.0;
  double tft_jitter_ms = 0.0;
  double itt_base_ms = 0.0;
  double itt_jitter_ms = 0.0;
  int64_t batch_capacity = 1;        // streams served at nominal speed
  int64_t hard_admission_limit = 1;  // streams admitted before queueing

  friend bool operator==(const PerfProfile&, const PerfProfile&) = default;
};

struct ModelDescriptor {
  std::string model_id;
  ModelKind kind = ModelKind::standalone;
  std::string provider_id;
  std::optional<std::string> base_model_id;     // base_with_adapter only
  std::optional<std::string> adapter_id;        // base_with_adapter only
  std::optional<std::string> adapter_owner_id;  // base_with_adapter only
  std::map<std::string, std::string> submodel_table;  // collaborative only
  std::optional<int64_t> partition_count;       // distributed only, metadata
  double expected_output_tokens = 1.0;          // router's prior mean
  std::string pricing_scheme_id;

  friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

// Key under which a collaborative table must always carry an entry.
inline constexpr const char* kDefaultSubmodelKey = "default";

struct DeploymentDescriptor {
  std::string deployment_id;
  std::string model_id;
  Site site = Site::edge;
  PerfProfile perf;
  int64_t gpu_count = 1;

  friend bool operator==(const DeploymentDescriptor&, const DeploymentDescriptor&) = default;
};

struct Plan {
  std::string plan_id;
  std::string tenant_id;
  std::string api_key;  // bearer credential for this plan
  std::set<LatencyClass> allowed_latency_classes;
  std::set<Site> allowed_sites;
  int64_t max_tokens_per_request = 1;
  int64_t monthly_token_quota = 1;
  int64_t quota_committed = 0;
  int64_t quota_reserved = 0;
  std::string pricing_scheme_id;
  bool active = true;

  friend bool operator==(const Plan&, const Plan&) = default;
};

enum class PricingVariant : uint8_t { per_call, per_token, resource, subscription };

const char* pricing_variant_name(PricingVariant v);
PricingVariant pricing_variant_from_name(std::string_view name);

// Split weights are parts-per-million and must sum to exactly 1,000,000.
inline constexpr int64_t kShareDenominatorPpm = 1'000'000;

struct PricingScheme {
  std::string scheme_id;
  PricingVariant variant = PricingVariant::per_token;
  Money flat_per_call;
  Money rate_in_per_token;
  Money rate_out_per_token;
  Money rate_gpu_second;
  Money rate_egress_byte;
  Money monthly_fee;
  int64_t included_tokens = 0;
  Money overage_rate_out;
  std::map<std::string, int64_t> share_splits_ppm;

  friend bool operator==(const PricingScheme&, const PricingScheme&) = default;
};

// Invariant validation for each entity in isolation (kind-conditional fields,
// ranges, split sums). Reference resolution happens in the Catalog.
void validate(const ModelDescriptor& m);
void validate(const DeploymentDescriptor& d);
void validate(const Plan& p);
void validate(const PricingScheme& s);

// Marketplace registry: models, deployments, plans, pricing schemes.
//
// Read-mostly store. Readers take a shared lock and see a consistent
// snapshot; mutations serialize behind an exclusive lock and are persisted
// (write-ahead) before the call returns when a data directory is attached.
//
// On-disk layout: <dir>/models.json, deployments.json, plans.json,
// pricing.json. Each file is one JSON document followed by a trailing
// "sha256:<hex>" checksum line over the document bytes.
class Catalog {
 public:
  Catalog() = default;

  // Movable while unshared (construction/loading); the lock itself does not
  // travel.
  Catalog(Catalog&& other) noexcept
      : models_(std::move(other.models_)),
        deployments_(std::move(other.deployments_)),
        plans_(std::move(other.plans_)),
        schemes_(std::move(other.schemes_)),
        storage_dir_(std::move(other.storage_dir_)) {}
  Catalog& operator=(Catalog&& other) noexcept {
    models_ = std::move(other.models_);
    deployments_ = std::move(other.deployments_);
    plans_ = std::move(other.plans_);
    schemes_ = std::move(other.schemes_);
    storage_dir_ = std::move(other.storage_dir_);
    return *this;
  }

  // Attach a data directory; subsequent mutations persist write-ahead.
  void attach_storage(const std::filesystem::path& dir);

  std::string register_model(ModelDescriptor desc);
  std::string register_deployment(DeploymentDescriptor desc);
  std::string create_plan(Plan plan);
  std::string create_pricing_scheme(PricingScheme scheme);

  std::optional<ModelDescriptor> lookup_model(const std::string& id) const;
  std::optional<DeploymentDescriptor> lookup_deployment(const std::string& id) const;
  std::optional<Plan> lookup_plan(const std::string& id) const;
  std::optional<PricingScheme> lookup_pricing_scheme(const std::string& id) const;

  std::vector<ModelDescriptor> list_models() const;
  std::vector<DeploymentDescriptor> list_deployments() const;
  std::vector<Plan> list_plans() const;
  std::vector<PricingScheme> list_pricing_schemes() const;

  // Deployments of one model, ordered by deployment_id.
  std::vector<DeploymentDescriptor> candidates(const std::string& model_id) const;

  // Replace stored quota counters (used when snapshotting live plan state).
  void update_plan_quota(const std::string& plan_id, int64_t committed,
                         int64_t reserved);

  // Full referential-integrity scan; throws on the first dangling reference.
  void check_integrity() const;

  void persist() const;
  void persist(const std::filesystem::path& dir) const;
  static Catalog load(const std::filesystem::path& dir);

  bool deep_equals(const Catalog& other) const;

 private:
  void persist_locked(const std::filesystem::path& dir) const;
  void check_integrity_locked() const;

  mutable std::shared_mutex mutex_;
  std::map<std::string, ModelDescriptor> models_;
  std::map<std::string, DeploymentDescriptor> deployments_;
  std::map<std::string, Plan> plans_;
  std::map<std::string, PricingScheme> schemes_;
  std::optional<std::filesystem::path> storage_dir_;
};

// Data directory resolution: explicit flag wins, then AIGW_DATA_DIR, then
// "./data".
std::filesystem::path resolve_data_dir(const std::string& cli_flag_value);

}  // namespace aigw
