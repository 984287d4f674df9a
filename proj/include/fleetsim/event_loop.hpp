#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace fleetsim::sim {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation time in integer microseconds; metrics report milliseconds.
using TimeUs = int64_t;

inline TimeUs ms_to_us(double ms) {
  return static_cast<TimeUs>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5));
}
inline double us_to_ms(TimeUs us) { return static_cast<double>(us) / 1000.0; }

// Deterministic draws on top of mt19937_64. The helpers avoid std
// distributions so the stream does not depend on the standard library
// implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform integer in [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw SimError("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());  // full range
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  // Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  // value * (1 ± frac), uniformly.
  double jittered(double value, double frac) {
    return value * (1.0 + frac * (2.0 * uniform01() - 1.0));
  }

 private:
  std::mt19937_64 engine_;
};

using EventId = uint64_t;

// Single-threaded discrete-event loop. Events run in (time, seq) order; seq
// is the scheduling order, so same-time events run FIFO.
class SimLoop {
 public:
  TimeUs now() const { return now_; }

  EventId schedule(TimeUs delay_us, std::function<void()> action) {
    if (delay_us < 0) throw SimError("cannot schedule into the past");
    EventId id = next_seq_++;
    queue_.push(Event{now_ + delay_us, id, std::move(action)});
    return id;
  }

  void cancel(EventId id) { cancelled_.insert(id); }

  // Runs events with time <= deadline, then advances the clock to deadline.
  void run_until(TimeUs deadline) {
    while (!queue_.empty() && queue_.top().time <= deadline) {
      Event ev = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      now_ = ev.time;
      if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
        cancelled_.erase(it);
        continue;
      }
      ev.action();
    }
    if (deadline > now_) now_ = deadline;
  }

  // Runs until the queue is drained.
  void run() {
    while (!queue_.empty()) {
      Event ev = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      now_ = ev.time;
      if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
        cancelled_.erase(it);
        continue;
      }
      ev.action();
    }
  }

  bool empty() const { return queue_.empty(); }

 private:
  struct Event {
    TimeUs time;
    EventId seq;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  TimeUs now_ = 0;
  EventId next_seq_ = 1;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<EventId> cancelled_;
};

}  // namespace fleetsim::sim
