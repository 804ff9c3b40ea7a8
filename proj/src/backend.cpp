#include "aigw/backend.hpp"

#include <algorithm>

namespace aigw {

void SimSession::cancel() {
  if (cancel_requested_.exchange(true)) return;
  // Finalization hops onto the scheduler so session state never mutates off
  // the owning thread.
  SimulatedBackend* backend = backend_;
  backend->scheduler_.schedule_at(
      backend->scheduler_.now_ms(),
      [backend, session = shared_from_this()] { backend->process_cancel(session); });
}

SimulatedBackend::SimulatedBackend(Scheduler& scheduler, const Rng& rng_root)
    : scheduler_(scheduler), rng_root_(rng_root) {}

void SimulatedBackend::add_deployment(const DeploymentDescriptor& desc,
                                      const LengthDist& natural_lengths) {
  validate(desc);
  std::unique_lock map_lock(map_mutex_);
  if (deployments_.count(desc.deployment_id)) {
    fail(Errc::duplicate_id, "deployment " + desc.deployment_id);
  }
  deployments_.emplace(
      desc.deployment_id,
      std::make_unique<DeploymentState>(
          desc, natural_lengths,
          rng_root_.child("deployment/" + desc.deployment_id)));
}

bool SimulatedBackend::has_deployment(const std::string& deployment_id) const {
  std::shared_lock map_lock(map_mutex_);
  return deployments_.count(deployment_id) > 0;
}

SimulatedBackend::DeploymentState* SimulatedBackend::find_state(
    const std::string& deployment_id) const {
  std::shared_lock map_lock(map_mutex_);
  auto it = deployments_.find(deployment_id);
  return it == deployments_.end() ? nullptr : it->second.get();
}

std::shared_ptr<SimSession> SimulatedBackend::spawn_stream(
    const std::string& deployment_id, const GenerationRequest& request,
    SessionCallbacks callbacks) {
  DeploymentState* state = find_state(deployment_id);
  if (!state) {
    fail(Errc::dangling_reference, "deployment " + deployment_id);
  }

  auto session = std::make_shared<SimSession>();
  session->backend_ = this;
  session->request_id_ = request.request_id;
  session->deployment_id_ = deployment_id;
  session->callbacks_ = std::move(callbacks);
  session->t_request_ms = scheduler_.now_ms();

  int64_t max_tokens = request.max_output_tokens;
  bool ignore_eos = request.ignore_eos;
  sessions_spawned_.fetch_add(1);

  scheduler_.schedule_at(session->t_request_ms, [this, state, session,
                                                 max_tokens, ignore_eos] {
    if (session->state != SimSession::State::pending) return;
    session->planned_tokens =
        ignore_eos ? max_tokens
                   : std::min(natural_length_sample(state->natural_lengths,
                                                    state->rng),
                              max_tokens);
    if (state->active < state->desc.perf.hard_admission_limit) {
      start_session(*state, session);
    } else {
      session->state = SimSession::State::queued;
      state->wait_queue.push_back(session);
      state->queued_snapshot.store(int64_t(state->wait_queue.size()));
    }
  });
  return session;
}

void SimulatedBackend::start_session(DeploymentState& state,
                                     const std::shared_ptr<SimSession>& session) {
  session->state = SimSession::State::active;
  state.active += 1;
  state.active_snapshot.store(state.active);

  double tft = jittered_sample(state.rng, state.desc.perf.tft_base_ms,
                               state.desc.perf.tft_jitter_ms, 0.0);
  scheduler_.schedule_at(scheduler_.now_ms() + tft,
                         [this, &state, session]() mutable {
                           emit_token(state, std::move(session));
                         });
}

void SimulatedBackend::emit_token(DeploymentState& state,
                                  std::shared_ptr<SimSession> session) {
  if (session->state != SimSession::State::active) return;
  double now = scheduler_.now_ms();
  if (session->cancel_requested_.load()) {
    // The cancel hop will finalize; emit nothing further.
    return;
  }

  if (session->emitted == 0) session->t_first_token_ms = now;

  TokenEvent event;
  event.request_id = session->request_id_;
  event.index = uint64_t(session->emitted);
  event.t_emit_ms = now;
  event.payload_bytes = 0;  // assigned by the relay when the event hits a wire
  session->emitted += 1;
  tokens_emitted_.fetch_add(1);
  if (session->callbacks_.on_token) session->callbacks_.on_token(event);

  if (session->emitted >= session->planned_tokens) {
    finish_session(state, session, now, false);
    return;
  }

  double gap = jittered_sample(state.rng, state.desc.perf.itt_base_ms,
                               state.desc.perf.itt_jitter_ms, 1e-6);
  double slowdown = std::max(
      1.0, double(state.active) / double(state.desc.perf.batch_capacity));
  scheduler_.schedule_at(now + gap * slowdown,
                         [this, &state, session]() mutable {
                           emit_token(state, std::move(session));
                         });
}

void SimulatedBackend::finish_session(DeploymentState& state,
                                      const std::shared_ptr<SimSession>& session,
                                      double t_done_ms, bool cancelled) {
  session->state = SimSession::State::finished;
  state.active -= 1;
  state.active_snapshot.store(state.active);
  drain_queue(state);

  SessionTiming timing;
  timing.t_request_ms = session->t_request_ms;
  timing.t_first_token_ms =
      session->emitted > 0 ? session->t_first_token_ms : session->t_request_ms;
  timing.t_done_ms = t_done_ms;
  if (session->callbacks_.on_done) session->callbacks_.on_done(timing, cancelled);
}

void SimulatedBackend::process_cancel(const std::shared_ptr<SimSession>& session) {
  DeploymentState* found = find_state(session->deployment_id_);
  if (!found) return;
  DeploymentState& state = *found;
  double now = scheduler_.now_ms();

  switch (session->state) {
    case SimSession::State::finished:
      return;
    case SimSession::State::pending:
      // Spawn hop not yet processed; mark finished so it becomes a no-op.
      session->state = SimSession::State::finished;
      break;
    case SimSession::State::queued: {
      auto pos = std::find(state.wait_queue.begin(), state.wait_queue.end(), session);
      if (pos != state.wait_queue.end()) state.wait_queue.erase(pos);
      state.queued_snapshot.store(int64_t(state.wait_queue.size()));
      session->state = SimSession::State::finished;
      break;
    }
    case SimSession::State::active:
      finish_session(state, session, now, true);
      return;
  }

  SessionTiming timing;
  timing.t_request_ms = session->t_request_ms;
  timing.t_first_token_ms = session->t_request_ms;
  timing.t_done_ms = now;
  if (session->callbacks_.on_done) session->callbacks_.on_done(timing, true);
}

void SimulatedBackend::drain_queue(DeploymentState& state) {
  while (!state.wait_queue.empty() &&
         state.active < state.desc.perf.hard_admission_limit) {
    auto next = state.wait_queue.front();
    state.wait_queue.pop_front();
    state.queued_snapshot.store(int64_t(state.wait_queue.size()));
    if (next->state != SimSession::State::queued) continue;
    start_session(state, next);
  }
}

int64_t SimulatedBackend::active_streams(const std::string& deployment_id) const {
  DeploymentState* state = find_state(deployment_id);
  if (!state) fail(Errc::dangling_reference, "deployment " + deployment_id);
  return state->active_snapshot.load();
}

int64_t SimulatedBackend::queued_sessions(const std::string& deployment_id) const {
  DeploymentState* state = find_state(deployment_id);
  if (!state) fail(Errc::dangling_reference, "deployment " + deployment_id);
  return state->queued_snapshot.load();
}

}  // namespace aigw
