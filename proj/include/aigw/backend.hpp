#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "aigw/admission.hpp"
#include "aigw/catalog.hpp"
#include "aigw/clock.hpp"
#include "aigw/rng.hpp"
#include "aigw/sampling.hpp"

namespace aigw {

struct SessionCallbacks {
  std::function<void(const TokenEvent&)> on_token;
  std::function<void(const SessionTiming&, bool cancelled)> on_done;
};

class SimulatedBackend;

// Handle to one in-flight simulated stream. cancel() is cooperative and safe
// from any thread; the session finalizes on the scheduler with whatever
// tokens were already emitted (partial usage still gets metered upstream).
class SimSession : public std::enable_shared_from_this<SimSession> {
 public:
  const std::string& request_id() const { return request_id_; }
  void cancel();

 private:
  friend class SimulatedBackend;

  enum class State { pending, queued, active, finished };

  SimulatedBackend* backend_ = nullptr;
  std::string request_id_;
  std::string deployment_id_;
  SessionCallbacks callbacks_;
  State state = State::pending;
  std::atomic<bool> cancel_requested_{false};
  int64_t planned_tokens = 0;
  int64_t emitted = 0;
  double t_request_ms = 0.0;
  double t_first_token_ms = 0.0;
};

// Streaming-LLM deployment simulator.
//
// Admission: a spawned session starts immediately while the deployment holds
// fewer than hard_admission_limit active streams, otherwise it waits in FIFO
// order and the wait adds to its TFT. First token fires tft_base +/- jitter
// after start; each later gap is (itt_base +/- jitter) * max(1, n/C) with n
// the active-stream count at emission, so saturation beyond the batch
// capacity C stretches token gaps linearly.
//
// All state mutates on the owning scheduler (virtual: the deterministic
// event loop; real: the worker thread), so a fixed seed plus a virtual clock
// reproduces the exact event trace.
class SimulatedBackend {
 public:
  SimulatedBackend(Scheduler& scheduler, const Rng& rng_root);

  void add_deployment(const DeploymentDescriptor& desc,
                      const LengthDist& natural_lengths = {5.171, 1.2, 4096});

  bool has_deployment(const std::string& deployment_id) const;

  // Emits exactly max_output_tokens tokens when ignore_eos, otherwise
  // min(sampled natural length, max_output_tokens).
  std::shared_ptr<SimSession> spawn_stream(const std::string& deployment_id,
                                           const GenerationRequest& request,
                                           SessionCallbacks callbacks);

  int64_t active_streams(const std::string& deployment_id) const;
  int64_t queued_sessions(const std::string& deployment_id) const;
  uint64_t sessions_spawned() const { return sessions_spawned_.load(); }
  uint64_t tokens_emitted() const { return tokens_emitted_.load(); }

 private:
  struct DeploymentState {
    DeploymentDescriptor desc;
    LengthDist natural_lengths;
    Rng rng;
    int64_t active = 0;
    std::deque<std::shared_ptr<SimSession>> wait_queue;
    std::atomic<int64_t> active_snapshot{0};
    std::atomic<int64_t> queued_snapshot{0};

    DeploymentState(DeploymentDescriptor d, LengthDist lengths, Rng r)
        : desc(std::move(d)), natural_lengths(lengths), rng(r) {}
  };

  void start_session(DeploymentState& state, const std::shared_ptr<SimSession>& session);
  void emit_token(DeploymentState& state, std::shared_ptr<SimSession> session);
  void finish_session(DeploymentState& state, const std::shared_ptr<SimSession>& session,
                      double t_done_ms, bool cancelled);
  void process_cancel(const std::shared_ptr<SimSession>& session);
  void drain_queue(DeploymentState& state);

  DeploymentState* find_state(const std::string& deployment_id) const;

  Scheduler& scheduler_;
  Rng rng_root_;
  mutable std::shared_mutex map_mutex_;  // map structure only
  std::map<std::string, std::unique_ptr<DeploymentState>> deployments_;
  std::atomic<uint64_t> sessions_spawned_{0};
  std::atomic<uint64_t> tokens_emitted_{0};

  friend class SimSession;
};

}  // namespace aigw
