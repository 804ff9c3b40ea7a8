#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace aigw {

// Scheduling substrate shared by the simulator and the gateway. Virtual mode
// is a deterministic single-threaded event loop (time advances only by event
// processing); real mode runs callbacks on one worker thread at wall-clock
// deadlines. In both modes callbacks for equal deadlines run in schedule
// order, and time never goes backwards.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  virtual double now_ms() const = 0;
  virtual void schedule_at(double t_ms, std::function<void()> fn) = 0;
  virtual bool is_virtual() const = 0;

  void schedule_after(double delay_ms, std::function<void()> fn) {
    schedule_at(now_ms() + delay_ms, std::move(fn));
  }
};

class VirtualScheduler final : public Scheduler {
 public:
  explicit VirtualScheduler(double start_ms = 0.0) : now_ms_(start_ms) {}

  double now_ms() const override { return now_ms_; }
  bool is_virtual() const override { return true; }

  void schedule_at(double t_ms, std::function<void()> fn) override;

  // Processes events in (time, insertion) order until the queue drains.
  void run_until_idle();

  // Processes events with deadline <= t_ms, then advances the clock to t_ms.
  void run_until(double t_ms);

  size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    double t_ms;
    uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& other) const {
      if (t_ms != other.t_ms) return t_ms > other.t_ms;
      return seq > other.seq;
    }
  };

  double now_ms_;
  uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
};

class RealScheduler final : public Scheduler {
 public:
  RealScheduler();
  ~RealScheduler() override;

  RealScheduler(const RealScheduler&) = delete;
  RealScheduler& operator=(const RealScheduler&) = delete;

  double now_ms() const override;
  bool is_virtual() const override { return false; }

  // Thread-safe; wakes the worker when the new event becomes the earliest.
  void schedule_at(double t_ms, std::function<void()> fn) override;

  // Stops the worker after the currently running callback; pending events
  // are dropped.
  void stop();

 private:
  struct Event {
    double t_ms;
    uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& other) const {
      if (t_ms != other.t_ms) return t_ms > other.t_ms;
      return seq > other.seq;
    }
  };

  void worker_loop();

  std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  uint64_t next_seq_ = 0;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace aigw
