#include "aigw/catalog.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>

#include "aigw/sha256.hpp"
#include "json.hpp"

namespace aigw {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::standalone: return "standalone";
    case ModelKind::base_with_adapter: return "base_with_adapter";
    case ModelKind::distributed: return "distributed";
    case ModelKind::collaborative: return "collaborative";
  }
  return "unknown";
}

ModelKind model_kind_from_name(std::string_view name) {
  if (name == "standalone") return ModelKind::standalone;
  if (name == "base_with_adapter") return ModelKind::base_with_adapter;
  if (name == "distributed") return ModelKind::distributed;
  if (name == "collaborative") return ModelKind::collaborative;
  fail(Errc::invalid_argument, "unknown model kind: " + std::string(name));
}

const char* site_name(Site s) {
  return s == Site::edge ? "edge" : "cloud";
}

Site site_from_name(std::string_view name) {
  if (name == "edge") return Site::edge;
  if (name == "cloud") return Site::cloud;
  fail(Errc::invalid_argument, "unknown site: " + std::string(name));
}

const char* pricing_variant_name(PricingVariant v) {
  switch (v) {
    case PricingVariant::per_call: return "per_call";
    case PricingVariant::per_token: return "per_token";
    case PricingVariant::resource: return "resource";
    case PricingVariant::subscription: return "subscription";
  }
  return "unknown";
}

PricingVariant pricing_variant_from_name(std::string_view name) {
  if (name == "per_call") return PricingVariant::per_call;
  if (name == "per_token") return PricingVariant::per_token;
  if (name == "resource") return PricingVariant::resource;
  if (name == "subscription") return PricingVariant::subscription;
  fail(Errc::invalid_argument, "unknown pricing variant: " + std::string(name));
}

void validate(const ModelDescriptor& m) {
  if (m.model_id.empty()) fail(Errc::invalid_argument, "model_id empty");
  if (!(m.expected_output_tokens > 0.0)) {
    fail(Errc::invalid_argument, "expected_output_tokens must be positive");
  }
  const bool adapter_kind = m.kind == ModelKind::base_with_adapter;
  if (adapter_kind !=
      (m.base_model_id.has_value() && m.adapter_id.has_value() &&
       m.adapter_owner_id.has_value())) {
    fail(Errc::invalid_kind_fields,
         "base/adapter fields present iff kind is base_with_adapter");
  }
  if (!adapter_kind &&
      (m.base_model_id || m.adapter_id || m.adapter_owner_id)) {
    fail(Errc::invalid_kind_fields, "adapter fields on non-adapter model");
  }
  const bool collaborative = m.kind == ModelKind::collaborative;
  if (collaborative != !m.submodel_table.empty()) {
    fail(Errc::invalid_kind_fields,
         "submodel_table present iff kind is collaborative");
  }
  if (collaborative && !m.submodel_table.count(kDefaultSubmodelKey)) {
    fail(Errc::invalid_kind_fields, "collaborative table missing default entry");
  }
  const bool distributed = m.kind == ModelKind::distributed;
  if (distributed != m.partition_count.has_value()) {
    fail(Errc::invalid_kind_fields,
         "partition_count present iff kind is distributed");
  }
  if (distributed && *m.partition_count < 2) {
    fail(Errc::invalid_kind_fields, "partition_count must be >= 2");
  }
}

void validate(const DeploymentDescriptor& d) {
  if (d.deployment_id.empty()) fail(Errc::invalid_argument, "deployment_id empty");
  const PerfProfile& p = d.perf;
  if (!(p.tft_base_ms > 0.0) || !(p.itt_base_ms > 0.0) ||
      p.tft_jitter_ms < 0.0 || p.itt_jitter_ms < 0.0 ||
      !std::isfinite(p.tft_base_ms) || !std::isfinite(p.itt_base_ms)) {
    fail(Errc::invalid_profile, "timing parameters must be finite and positive");
  }
  if (p.batch_capacity < 1) {
    fail(Errc::invalid_profile, "batch_capacity must be >= 1");
  }
  if (p.hard_admission_limit < p.batch_capacity) {
    fail(Errc::invalid_profile,
         "hard_admission_limit must be >= batch_capacity");
  }
  if (d.gpu_count < 1) fail(Errc::invalid_profile, "gpu_count must be >= 1");
}

void validate(const Plan& p) {
  if (p.plan_id.empty()) fail(Errc::invalid_argument, "plan_id empty");
  if (p.allowed_latency_classes.empty() || p.allowed_sites.empty()) {
    fail(Errc::invalid_argument, "allowed sets must be non-empty");
  }
  if (p.max_tokens_per_request < 1 || p.monthly_token_quota < 1) {
    fail(Errc::invalid_argument, "token limits must be positive");
  }
  if (p.quota_committed < 0 || p.quota_reserved < 0 ||
      p.quota_committed + p.quota_reserved > p.monthly_token_quota) {
    fail(Errc::invalid_argument,
         "quota_committed + quota_reserved must stay within the monthly quota");
  }
}

void validate(const PricingScheme& s) {
  if (s.scheme_id.empty()) fail(Errc::invalid_argument, "scheme_id empty");
  for (Money rate : {s.flat_per_call, s.rate_in_per_token, s.rate_out_per_token,
                     s.rate_gpu_second, s.rate_egress_byte, s.monthly_fee,
                     s.overage_rate_out}) {
    if (rate.micro < 0) fail(Errc::invalid_argument, "rates must be >= 0");
  }
  if (s.included_tokens < 0) {
    fail(Errc::invalid_argument, "included_tokens must be >= 0");
  }
  int64_t sum = 0;
  for (const auto& [stakeholder, ppm] : s.share_splits_ppm) {
    if (stakeholder.empty()) fail(Errc::invalid_argument, "empty stakeholder id");
    if (ppm < 0) fail(Errc::invalid_argument, "split weights must be >= 0");
    sum += ppm;
  }
  if (sum != kShareDenominatorPpm) {
    fail(Errc::invalid_argument, "share splits must sum to exactly 1,000,000 ppm");
  }
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace {

json to_json(const ModelDescriptor& m) {
  json j{{"model_id", m.model_id},
         {"kind", model_kind_name(m.kind)},
         {"provider_id", m.provider_id},
         {"expected_output_tokens", m.expected_output_tokens},
         {"pricing_scheme_id", m.pricing_scheme_id}};
  if (m.base_model_id) j["base_model_id"] = *m.base_model_id;
  if (m.adapter_id) j["adapter_id"] = *m.adapter_id;
  if (m.adapter_owner_id) j["adapter_owner_id"] = *m.adapter_owner_id;
  if (!m.submodel_table.empty()) j["submodel_table"] = m.submodel_table;
  if (m.partition_count) j["partition_count"] = *m.partition_count;
  return j;
}

ModelDescriptor model_from_json(const json& j) {
  ModelDescriptor m;
  m.model_id = j.at("model_id").get<std::string>();
  m.kind = model_kind_from_name(j.at("kind").get<std::string>());
  m.provider_id = j.at("provider_id").get<std::string>();
  m.expected_output_tokens = j.at("expected_output_tokens").get<double>();
  m.pricing_scheme_id = j.at("pricing_scheme_id").get<std::string>();
  if (j.contains("base_model_id")) m.base_model_id = j["base_model_id"].get<std::string>();
  if (j.contains("adapter_id")) m.adapter_id = j["adapter_id"].get<std::string>();
  if (j.contains("adapter_owner_id")) m.adapter_owner_id = j["adapter_owner_id"].get<std::string>();
  if (j.contains("submodel_table")) {
    m.submodel_table = j["submodel_table"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("partition_count")) m.partition_count = j["partition_count"].get<int64_t>();
  return m;
}

json to_json(const DeploymentDescriptor& d) {
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

json to_json(const Plan& p) {
  json classes = json::array();
  for (LatencyClass c : p.allowed_latency_classes) classes.push_back(latency_class_name(c));
  json sites = json::array();
  for (Site s : p.allowed_sites) sites.push_back(site_name(s));
  return json{{"plan_id", p.plan_id},
              {"tenant_id", p.tenant_id},
              {"api_key", p.api_key},
              {"allowed_latency_classes", classes},
              {"allowed_sites", sites},
              {"max_tokens_per_request", p.max_tokens_per_request},
              {"monthly_token_quota", p.monthly_token_quota},
              {"quota_committed", p.quota_committed},
              {"quota_reserved", p.quota_reserved},
              {"pricing_scheme_id", p.pricing_scheme_id},
              {"active", p.active}};
}

Plan plan_from_json(const json& j) {
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
  p.quota_committed = j.at("quota_committed").get<int64_t>();
  p.quota_reserved = j.at("quota_reserved").get<int64_t>();
  p.pricing_scheme_id = j.at("pricing_scheme_id").get<std::string>();
  p.active = j.at("active").get<bool>();
  return p;
}

json to_json(const PricingScheme& s) {
  return json{{"scheme_id", s.scheme_id},
              {"variant", pricing_variant_name(s.variant)},
              {"flat_per_call_u", s.flat_per_call.micro},
              {"rate_in_per_token_u", s.rate_in_per_token.micro},
              {"rate_out_per_token_u", s.rate_out_per_token.micro},
              {"rate_gpu_second_u", s.rate_gpu_second.micro},
              {"rate_egress_byte_u", s.rate_egress_byte.micro},
              {"monthly_fee_u", s.monthly_fee.micro},
              {"included_tokens", s.included_tokens},
              {"overage_rate_out_u", s.overage_rate_out.micro},
              {"share_splits_ppm", s.share_splits_ppm}};
}

PricingScheme scheme_from_json(const json& j) {
  PricingScheme s;
  s.scheme_id = j.at("scheme_id").get<std::string>();
  s.variant = pricing_variant_from_name(j.at("variant").get<std::string>());
  s.flat_per_call = Money(j.at("flat_per_call_u").get<int64_t>());
  s.rate_in_per_token = Money(j.at("rate_in_per_token_u").get<int64_t>());
  s.rate_out_per_token = Money(j.at("rate_out_per_token_u").get<int64_t>());
  s.rate_gpu_second = Money(j.at("rate_gpu_second_u").get<int64_t>());
  s.rate_egress_byte = Money(j.at("rate_egress_byte_u").get<int64_t>());
  s.monthly_fee = Money(j.at("monthly_fee_u").get<int64_t>());
  s.included_tokens = j.at("included_tokens").get<int64_t>();
  s.overage_rate_out = Money(j.at("overage_rate_out_u").get<int64_t>());
  s.share_splits_ppm = j.at("share_splits_ppm").get<std::map<std::string, int64_t>>();
  return s;
}

constexpr const char* kChecksumPrefix = "sha256:";

void write_checksummed(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::storage_corrupt, "cannot write " + tmp.string());
    out << body << "\n" << kChecksumPrefix << sha256_hex(body) << "\n";
    out.flush();
    if (!out) fail(Errc::storage_corrupt, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_checksummed(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::storage_corrupt, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  // Expect: <body>\nsha256:<hex>\n
  size_t marker = text.rfind(std::string("\n") + kChecksumPrefix);
  if (marker == std::string::npos) {
    fail(Errc::storage_corrupt, "missing checksum line in " + path.string());
  }
  std::string body = text.substr(0, marker);
  std::string tail = text.substr(marker + 1);
  if (tail.empty() || tail.back() != '\n') {
    fail(Errc::storage_corrupt, "truncated checksum line in " + path.string());
  }
  tail.pop_back();
  std::string expected = tail.substr(std::string(kChecksumPrefix).size());
  if (expected != sha256_hex(body)) {
    fail(Errc::storage_corrupt, "checksum mismatch in " + path.string());
  }
  return body;
}

json parse_document(const std::string& body, const std::filesystem::path& path) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) {
    fail(Errc::storage_corrupt, "invalid JSON in " + path.string());
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

void Catalog::attach_storage(const std::filesystem::path& dir) {
  std::unique_lock lock(mutex_);
  std::filesystem::create_directories(dir);
  storage_dir_ = dir;
  persist_locked(dir);
}

std::string Catalog::register_model(ModelDescriptor desc) {
  validate(desc);
  std::unique_lock lock(mutex_);
  if (models_.count(desc.model_id)) {
    fail(Errc::duplicate_id, "model " + desc.model_id);
  }
  if (desc.base_model_id && !models_.count(*desc.base_model_id)) {
    fail(Errc::dangling_reference, "base model " + *desc.base_model_id);
  }
  for (const auto& [tag, submodel] : desc.submodel_table) {
    if (!models_.count(submodel)) {
      fail(Errc::dangling_reference, "submodel " + submodel + " for tag " + tag);
    }
  }
  if (!schemes_.count(desc.pricing_scheme_id)) {
    fail(Errc::dangling_reference, "pricing scheme " + desc.pricing_scheme_id);
  }
  std::string id = desc.model_id;
  models_.emplace(id, std::move(desc));
  if (storage_dir_) persist_locked(*storage_dir_);
  return id;
}

std::string Catalog::register_deployment(DeploymentDescriptor desc) {
  validate(desc);
  std::unique_lock lock(mutex_);
  if (deployments_.count(desc.deployment_id)) {
    fail(Errc::duplicate_id, "deployment " + desc.deployment_id);
  }
  if (!models_.count(desc.model_id)) {
    fail(Errc::dangling_reference, "model " + desc.model_id);
  }
  std::string id = desc.deployment_id;
  deployments_.emplace(id, std::move(desc));
  if (storage_dir_) persist_locked(*storage_dir_);
  return id;
}

std::string Catalog::create_plan(Plan plan) {
  validate(plan);
  std::unique_lock lock(mutex_);
  if (plans_.count(plan.plan_id)) {
    fail(Errc::duplicate_id, "plan " + plan.plan_id);
  }
  if (!schemes_.count(plan.pricing_scheme_id)) {
    fail(Errc::dangling_reference, "pricing scheme " + plan.pricing_scheme_id);
  }
  std::string id = plan.plan_id;
  plans_.emplace(id, std::move(plan));
  if (storage_dir_) persist_locked(*storage_dir_);
  return id;
}

std::string Catalog::create_pricing_scheme(PricingScheme scheme) {
  validate(scheme);
  std::unique_lock lock(mutex_);
  if (schemes_.count(scheme.scheme_id)) {
    fail(Errc::duplicate_id, "pricing scheme " + scheme.scheme_id);
  }
  std::string id = scheme.scheme_id;
  schemes_.emplace(id, std::move(scheme));
  if (storage_dir_) persist_locked(*storage_dir_);
  return id;
}

std::optional<ModelDescriptor> Catalog::lookup_model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = models_.find(id);
  if (it == models_.end()) return std::nullopt;
  return it->second;
}

std::optional<DeploymentDescriptor> Catalog::lookup_deployment(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = deployments_.find(id);
  if (it == deployments_.end()) return std::nullopt;
  return it->second;
}

std::optional<Plan> Catalog::lookup_plan(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = plans_.find(id);
  if (it == plans_.end()) return std::nullopt;
  return it->second;
}

std::optional<PricingScheme> Catalog::lookup_pricing_scheme(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = schemes_.find(id);
  if (it == schemes_.end()) return std::nullopt;
  return it->second;
}

std::vector<ModelDescriptor> Catalog::list_models() const {
  std::shared_lock lock(mutex_);
  std::vector<ModelDescriptor> out;
  for (const auto& [_, m] : models_) out.push_back(m);
  return out;
}

std::vector<DeploymentDescriptor> Catalog::list_deployments() const {
  std::shared_lock lock(mutex_);
  std::vector<DeploymentDescriptor> out;
  for (const auto& [_, d] : deployments_) out.push_back(d);
  return out;
}

std::vector<Plan> Catalog::list_plans() const {
  std::shared_lock lock(mutex_);
  std::vector<Plan> out;
  for (const auto& [_, p] : plans_) out.push_back(p);
  return out;
}

std::vector<PricingScheme> Catalog::list_pricing_schemes() const {
  std::shared_lock lock(mutex_);
  std::vector<PricingScheme> out;
  for (const auto& [_, s] : schemes_) out.push_back(s);
  return out;
}

std::vector<DeploymentDescriptor> Catalog::candidates(const std::string& model_id) const {
  std::shared_lock lock(mutex_);
  std::vector<DeploymentDescriptor> out;
  for (const auto& [_, d] : deployments_) {
    if (d.model_id == model_id) out.push_back(d);
  }
  return out;  // map order == id order
}

void Catalog::update_plan_quota(const std::string& plan_id, int64_t committed,
                                int64_t reserved) {
  std::unique_lock lock(mutex_);
  auto it = plans_.find(plan_id);
  if (it == plans_.end()) fail(Errc::dangling_reference, "plan " + plan_id);
  it->second.quota_committed = committed;
  it->second.quota_reserved = reserved;
  if (storage_dir_) persist_locked(*storage_dir_);
}

void Catalog::check_integrity() const {
  std::shared_lock lock(mutex_);
  check_integrity_locked();
}

void Catalog::check_integrity_locked() const {
  for (const auto& [id, m] : models_) {
    if (m.base_model_id && !models_.count(*m.base_model_id)) {
      fail(Errc::dangling_reference, id + " -> base " + *m.base_model_id);
    }
    for (const auto& [tag, sub] : m.submodel_table) {
      if (!models_.count(sub)) {
        fail(Errc::dangling_reference, id + " -> submodel " + sub);
      }
    }
    if (!schemes_.count(m.pricing_scheme_id)) {
      fail(Errc::dangling_reference, id + " -> scheme " + m.pricing_scheme_id);
    }
  }
  for (const auto& [id, d] : deployments_) {
    if (!models_.count(d.model_id)) {
      fail(Errc::dangling_reference, id + " -> model " + d.model_id);
    }
  }
  for (const auto& [id, p] : plans_) {
    if (!schemes_.count(p.pricing_scheme_id)) {
      fail(Errc::dangling_reference, id + " -> scheme " + p.pricing_scheme_id);
    }
  }
}

void Catalog::persist() const {
  std::shared_lock lock(mutex_);
  if (!storage_dir_) fail(Errc::config_invalid, "no storage directory attached");
  persist_locked(*storage_dir_);
}

void Catalog::persist(const std::filesystem::path& dir) const {
  std::shared_lock lock(mutex_);
  std::filesystem::create_directories(dir);
  persist_locked(dir);
}

void Catalog::persist_locked(const std::filesystem::path& dir) const {
  json models = json::array();
  for (const auto& [_, m] : models_) models.push_back(to_json(m));
  json deployments = json::array();
  for (const auto& [_, d] : deployments_) deployments.push_back(to_json(d));
  json plans = json::array();
  for (const auto& [_, p] : plans_) plans.push_back(to_json(p));
  json schemes = json::array();
  for (const auto& [_, s] : schemes_) schemes.push_back(to_json(s));

  write_checksummed(dir / "models.json", json{{"models", models}}.dump(2));
  write_checksummed(dir / "deployments.json",
                    json{{"deployments", deployments}}.dump(2));
  write_checksummed(dir / "plans.json", json{{"plans", plans}}.dump(2));
  write_checksummed(dir / "pricing.json", json{{"schemes", schemes}}.dump(2));
}

Catalog Catalog::load(const std::filesystem::path& dir) {
  Catalog cat;
  {
    json j = parse_document(read_checksummed(dir / "pricing.json"), dir / "pricing.json");
    for (const auto& item : j.at("schemes")) {
      PricingScheme s = scheme_from_json(item);
      validate(s);
      cat.schemes_.emplace(s.scheme_id, std::move(s));
    }
  }
  {
    json j = parse_document(read_checksummed(dir / "models.json"), dir / "models.json");
    for (const auto& item : j.at("models")) {
      ModelDescriptor m = model_from_json(item);
      validate(m);
      cat.models_.emplace(m.model_id, std::move(m));
    }
  }
  {
    json j = parse_document(read_checksummed(dir / "deployments.json"),
                            dir / "deployments.json");
    for (const auto& item : j.at("deployments")) {
      DeploymentDescriptor d = deployment_from_json(item);
      validate(d);
      cat.deployments_.emplace(d.deployment_id, std::move(d));
    }
  }
  {
    json j = parse_document(read_checksummed(dir / "plans.json"), dir / "plans.json");
    for (const auto& item : j.at("plans")) {
      Plan p = plan_from_json(item);
      validate(p);
      cat.plans_.emplace(p.plan_id, std::move(p));
    }
  }
  cat.check_integrity_locked();
  cat.storage_dir_ = dir;
  return cat;
}

bool Catalog::deep_equals(const Catalog& other) const {
  std::shared_lock lock_a(mutex_, std::defer_lock);
  std::shared_lock lock_b(other.mutex_, std::defer_lock);
  std::lock(lock_a, lock_b);
  return models_ == other.models_ && deployments_ == other.deployments_ &&
         plans_ == other.plans_ && schemes_ == other.schemes_;
}

std::filesystem::path resolve_data_dir(const std::string& cli_flag_value) {
  if (!cli_flag_value.empty()) return cli_flag_value;
  if (const char* env = std::getenv("AIGW_DATA_DIR"); env && *env) return env;
  return "data";
}

}  // namespace aigw
