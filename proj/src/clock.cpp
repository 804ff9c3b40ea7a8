#include "aigw/clock.hpp"

#include <algorithm>

namespace aigw {

void VirtualScheduler::schedule_at(double t_ms, std::function<void()> fn) {
  // Past deadlines fire at the current instant; virtual time is monotone.
  queue_.push(Event{std::max(t_ms, now_ms_), next_seq_++, std::move(fn)});
}

void VirtualScheduler::run_until_idle() {
  while (!queue_.empty()) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ms_ = ev.t_ms;
    ev.fn();
  }
}

void VirtualScheduler::run_until(double t_ms) {
  while (!queue_.empty() && queue_.top().t_ms <= t_ms) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ms_ = ev.t_ms;
    ev.fn();
  }
  now_ms_ = std::max(now_ms_, t_ms);
}

RealScheduler::RealScheduler()
    : epoch_(std::chrono::steady_clock::now()),
      worker_([this] { worker_loop(); }) {}

RealScheduler::~RealScheduler() { stop(); }

double RealScheduler::now_ms() const {
  auto elapsed = std::chrono::steady_clock::now() - epoch_;
  return std::chrono::duration<double, std::milli>(elapsed).count();
}

void RealScheduler::schedule_at(double t_ms, std::function<void()> fn) {
  {
    std::lock_guard guard(mutex_);
    if (stopping_) return;
    queue_.push(Event{t_ms, next_seq_++, std::move(fn)});
  }
  cv_.notify_one();
}

void RealScheduler::stop() {
  {
    std::lock_guard guard(mutex_);
    stopping_ = true;
  }
  cv_.notify_one();
  if (worker_.joinable()) worker_.join();
}

void RealScheduler::worker_loop() {
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    if (queue_.empty()) {
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      continue;
    }
    double next_t = queue_.top().t_ms;
    double now = now_ms();
    if (next_t > now) {
      auto deadline = epoch_ + std::chrono::duration_cast<
                                   std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double, std::milli>(next_t));
      cv_.wait_until(lock, deadline);
      continue;  // re-evaluate: new earlier events or stop may have arrived
    }
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    lock.unlock();
    ev.fn();
    lock.lock();
  }
}

}  // namespace aigw
