#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "aigw/catalog.hpp"

namespace aigw {

// One streaming inference request as submitted by a client.
struct GenerationRequest {
  std::string request_id;
  std::string tenant_id;
  std::string api_key;
  std::string target_model_id;
  std::optional<std::string> prompt_text;   // exactly one of the two prompts
  std::optional<int64_t> prompt_tokens;
  int64_t max_output_tokens = 1;
  bool stream = true;
  bool ignore_eos = false;
  LatencyClass latency_class = LatencyClass::standard;
  std::optional<std::string> category_tag;  // collaborative routing key

  void validate() const;
  // prompt_tokens when given, otherwise a deterministic ~4 bytes/token
  // estimate of prompt_text (never below 1).
  int64_t prompt_token_count() const;
};

enum class RejectReason : uint8_t {
  plan_inactive,
  latency_class_not_allowed,
  site_unavailable,
  per_request_cap_exceeded,
  quota_exceeded,
  auth_failed,
};

const char* reject_reason_name(RejectReason r);

struct Admission {
  bool admitted = false;
  std::string reservation_id;   // admit only
  int64_t reserved_tokens = 0;  // == request.max_output_tokens on admit
  RejectReason reason = RejectReason::auth_failed;

  static Admission admit(std::string reservation_id, int64_t reserved) {
    return Admission{true, std::move(reservation_id), reserved, RejectReason::auth_failed};
  }
  static Admission reject(RejectReason reason) {
    return Admission{false, {}, 0, reason};
  }
};

// Live plan/quota state with reservation bookkeeping. admit and settle on
// one plan are linearizable (a single mutex per plan); distinct plans
// proceed in parallel. The quota invariant
//     quota_committed + quota_reserved <= monthly_token_quota
// is checked on every mutation and a violation aborts loudly.
class PlanStore {
 public:
  explicit PlanStore(const Catalog& catalog);

  // Returns the active plan bound to the credential, or nullopt (AuthFailed).
  std::optional<Plan> authenticate(const std::string& api_key,
                                   const std::string& tenant_id) const;

  // Fig. 1b left branch. Checks in order: plan.active, latency class,
  // site availability for the target model, per-request cap, quota headroom.
  // On admit, quota_reserved grows by max_output_tokens atomically.
  Admission admit(const GenerationRequest& request);

  // Consumes a reservation exactly once: reserved tokens are released and
  // actual_output_tokens become committed. actual > reserved is OverCommit.
  void settle_reservation(const std::string& reservation_id,
                          int64_t actual_output_tokens);

  std::optional<Plan> lookup(const std::string& plan_id) const;
  std::optional<Plan> plan_of_tenant(const std::string& tenant_id) const;

  // Registers a plan created after construction (admin path).
  void register_plan(const Plan& plan);

  // Copy live quota counters back into the catalog (persists when attached).
  void snapshot_quota(Catalog& catalog) const;

  // Total tokens settled (sum of actuals) across all plans; test hook.
  int64_t total_committed() const;

 private:
  struct PlanState {
    std::mutex mutex;
    Plan plan;
  };
  struct Reservation {
    std::string plan_id;
    int64_t reserved_tokens = 0;
  };

  const Catalog& catalog_;
  mutable std::shared_mutex plans_mutex_;  // map structure only
  std::map<std::string, std::shared_ptr<PlanState>> plans_;
  mutable std::mutex reservations_mutex_;
  std::map<std::string, Reservation> reservations_;
  uint64_t next_reservation_ = 0;
};

}  // namespace aigw
