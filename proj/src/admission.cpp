#include "aigw/admission.hpp"

#include <cmath>

namespace aigw {

void GenerationRequest::validate() const {
  if (request_id.empty()) fail(Errc::invalid_argument, "request_id empty");
  if (prompt_text.has_value() == prompt_tokens.has_value()) {
    fail(Errc::invalid_argument,
         "exactly one of prompt_text / prompt_tokens must be set");
  }
  if (prompt_tokens && *prompt_tokens < 1) {
    fail(Errc::invalid_argument, "prompt_tokens must be positive");
  }
  if (max_output_tokens < 1) {
    fail(Errc::invalid_argument, "max_output_tokens must be >= 1");
  }
}

int64_t GenerationRequest::prompt_token_count() const {
  if (prompt_tokens) return *prompt_tokens;
  if (!prompt_text) return 1;
  return std::max<int64_t>(1, int64_t((prompt_text->size() + 3) / 4));
}

const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::plan_inactive: return "PlanInactive";
    case RejectReason::latency_class_not_allowed: return "LatencyClassNotAllowed";
    case RejectReason::site_unavailable: return "SiteUnavailable";
    case RejectReason::per_request_cap_exceeded: return "PerRequestCapExceeded";
    case RejectReason::quota_exceeded: return "QuotaExceeded";
    case RejectReason::auth_failed: return "AuthFailed";
  }
  return "Unknown";
}

PlanStore::PlanStore(const Catalog& catalog) : catalog_(catalog) {
  for (const Plan& p : catalog.list_plans()) {
    auto state = std::make_shared<PlanState>();
    state->plan = p;
    plans_.emplace(p.plan_id, std::move(state));
  }
}

std::optional<Plan> PlanStore::authenticate(const std::string& api_key,
                                            const std::string& tenant_id) const {
  if (api_key.empty()) return std::nullopt;
  std::shared_lock map_lock(plans_mutex_);
  for (const auto& [_, state] : plans_) {
    std::lock_guard guard(state->mutex);
    if (state->plan.api_key == api_key) {
      if (state->plan.tenant_id != tenant_id) return std::nullopt;
      return state->plan;
    }
  }
  return std::nullopt;
}

namespace {

// A model is reachable on a site set if it, or (for collaborative models)
// the submodel the request would resolve to, has a deployment there.
bool model_available_on_sites(const Catalog& catalog,
                              const GenerationRequest& request,
                              const ModelDescriptor& model,
                              const std::set<Site>& sites) {
  std::string effective = model.model_id;
  if (model.kind == ModelKind::collaborative) {
    auto it = request.category_tag
                  ? model.submodel_table.find(*request.category_tag)
                  : model.submodel_table.end();
    if (it == model.submodel_table.end()) {
      it = model.submodel_table.find(kDefaultSubmodelKey);
    }
    effective = it->second;
  }
  for (const DeploymentDescriptor& d : catalog.candidates(effective)) {
    if (sites.count(d.site)) return true;
  }
  return false;
}

}  // namespace

Admission PlanStore::admit(const GenerationRequest& request) {
  request.validate();

  std::shared_ptr<PlanState> state;
  {
    // Re-authenticate against live state; auth and admission are separate
    // steps in the pipeline but share the credential binding.
    std::shared_lock map_lock(plans_mutex_);
    for (const auto& [_, candidate] : plans_) {
      std::lock_guard guard(candidate->mutex);
      if (candidate->plan.api_key == request.api_key &&
          candidate->plan.tenant_id == request.tenant_id) {
        state = candidate;
        break;
      }
    }
  }
  if (!state) return Admission::reject(RejectReason::auth_failed);

  auto model = catalog_.lookup_model(request.target_model_id);

  std::lock_guard guard(state->mutex);
  Plan& plan = state->plan;

  if (!plan.active) {
    return Admission::reject(RejectReason::plan_inactive);
  }
  if (!plan.allowed_latency_classes.count(request.latency_class)) {
    return Admission::reject(RejectReason::latency_class_not_allowed);
  }
  if (!model || !model_available_on_sites(catalog_, request, *model,
                                          plan.allowed_sites)) {
    return Admission::reject(RejectReason::site_unavailable);
  }
  if (request.max_output_tokens > plan.max_tokens_per_request) {
    return Admission::reject(RejectReason::per_request_cap_exceeded);
  }
  if (plan.quota_committed + plan.quota_reserved + request.max_output_tokens >
      plan.monthly_token_quota) {
    return Admission::reject(RejectReason::quota_exceeded);
  }

  plan.quota_reserved += request.max_output_tokens;
  if (plan.quota_committed + plan.quota_reserved > plan.monthly_token_quota) {
    fail(Errc::invalid_argument, "quota invariant violated after reserve");
  }

  std::string reservation_id;
  {
    std::lock_guard res_guard(reservations_mutex_);
    reservation_id = "rsv-" + std::to_string(next_reservation_++);
    reservations_.emplace(reservation_id,
                          Reservation{plan.plan_id, request.max_output_tokens});
  }
  return Admission::admit(reservation_id, request.max_output_tokens);
}

void PlanStore::settle_reservation(const std::string& reservation_id,
                                   int64_t actual_output_tokens) {
  Reservation reservation;
  {
    std::lock_guard res_guard(reservations_mutex_);
    auto it = reservations_.find(reservation_id);
    if (it == reservations_.end()) {
      fail(Errc::unknown_reservation, reservation_id);
    }
    reservation = it->second;
    if (actual_output_tokens > reservation.reserved_tokens) {
      // Metering produced more tokens than were reserved: a bug upstream.
      fail(Errc::over_commit,
           reservation_id + ": actual " + std::to_string(actual_output_tokens) +
               " > reserved " + std::to_string(reservation.reserved_tokens));
    }
    if (actual_output_tokens < 0) {
      fail(Errc::invalid_argument, "negative actual_output_tokens");
    }
    reservations_.erase(it);
  }

  std::shared_ptr<PlanState> state;
  {
    std::shared_lock map_lock(plans_mutex_);
    auto it = plans_.find(reservation.plan_id);
    if (it == plans_.end()) {
      fail(Errc::unknown_reservation, "plan vanished for " + reservation_id);
    }
    state = it->second;
  }
  std::lock_guard guard(state->mutex);
  Plan& plan = state->plan;
  plan.quota_reserved -= reservation.reserved_tokens;
  plan.quota_committed += actual_output_tokens;
  if (plan.quota_reserved < 0 ||
      plan.quota_committed + plan.quota_reserved > plan.monthly_token_quota) {
    fail(Errc::invalid_argument, "quota invariant violated after settle");
  }
}

std::optional<Plan> PlanStore::lookup(const std::string& plan_id) const {
  std::shared_lock map_lock(plans_mutex_);
  auto it = plans_.find(plan_id);
  if (it == plans_.end()) return std::nullopt;
  std::lock_guard guard(it->second->mutex);
  return it->second->plan;
}

std::optional<Plan> PlanStore::plan_of_tenant(const std::string& tenant_id) const {
  std::optional<Plan> found;
  std::shared_lock map_lock(plans_mutex_);
  for (const auto& [_, state] : plans_) {
    std::lock_guard guard(state->mutex);
    if (state->plan.tenant_id == tenant_id && state->plan.active) {
      if (found) fail(Errc::ambiguous_plan, "tenant " + tenant_id);
      found = state->plan;
    }
  }
  return found;
}

void PlanStore::register_plan(const Plan& plan) {
  std::unique_lock map_lock(plans_mutex_);
  if (plans_.count(plan.plan_id)) {
    fail(Errc::duplicate_id, "plan " + plan.plan_id);
  }
  auto state = std::make_shared<PlanState>();
  state->plan = plan;
  plans_.emplace(plan.plan_id, std::move(state));
}

void PlanStore::snapshot_quota(Catalog& catalog) const {
  std::shared_lock map_lock(plans_mutex_);
  for (const auto& [id, state] : plans_) {
    int64_t committed, reserved;
    {
      std::lock_guard guard(state->mutex);
      committed = state->plan.quota_committed;
      reserved = state->plan.quota_reserved;
    }
    catalog.update_plan_quota(id, committed, reserved);
  }
}

int64_t PlanStore::total_committed() const {
  int64_t sum = 0;
  std::shared_lock map_lock(plans_mutex_);
  for (const auto& [_, state] : plans_) {
    std::lock_guard guard(state->mutex);
    sum += state->plan.quota_committed;
  }
  return sum;
}

}  // namespace aigw
