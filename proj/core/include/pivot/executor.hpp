#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace pivot::exec {

// Exact rational time in seconds; keeps tick schedules and tie-breaking
// free of floating-point drift.
struct VTime {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static VTime zero() { return {0, 1}; }
  static VTime of(std::int64_t num, std::int64_t den);
  static VTime seconds(std::int64_t s) { return {s, 1}; }
  static VTime millis(std::int64_t ms) { return of(ms, 1000); }

  VTime operator+(const VTime& o) const;
  VTime operator-(const VTime& o) const;
  bool operator<(const VTime& o) const;
  bool operator<=(const VTime& o) const { return !(o < *this); }
  bool operator==(const VTime& o) const { return num == o.num && den == o.den; }
  bool operator!=(const VTime& o) const { return !(*this == o); }

  double to_seconds() const { return static_cast<double>(num) / static_cast<double>(den); }
};

using Value = std::shared_ptr<const void>;

struct Versioned {
  Value value;
  std::uint64_t version = 0;  // 0 = nothing published yet
  VTime publish_time;
};

// Single-producer latest-value cell: publish replaces, reads never block
// and never see a torn pair (version always matches value).
class Mailbox {
 public:
  void publish(Value value, VTime when) {
    std::lock_guard lock(mutex_);
    current_.value = std::move(value);
    current_.version += 1;
    current_.publish_time = when;
  }
  Versioned read() const {
    std::lock_guard lock(mutex_);
    return current_;
  }

 private:
  mutable std::mutex mutex_;
  Versioned current_;
};

using Inputs = std::map<std::string, Versioned>;
using ComputeFn = std::function<Value(const Inputs&)>;

struct StageSpec {
  std::string name;
  std::int64_t rate_hz = 1;
  VTime sim_cost = VTime::zero();  // virtual-clock compute duration
  ComputeFn compute;
  std::vector<std::string> inputs;  // upstream mailbox names
};

enum class ExecMode { VirtualClock, RealClock, Synchronous };

struct ExecutorConfig {
  ExecMode mode = ExecMode::VirtualClock;
  VTime duration = VTime::seconds(1);
  std::string source_name = "camera";
};

// The last stage drives the environment: each of its publishes is handed to
// `step`, whose return value lands in the source mailbox. A null return
// stops the run.
struct EnvHook {
  std::function<Value()> initial;
  std::function<Value(const Value& action_output, VTime when)> step;
};

struct ConsumedInput {
  std::string mailbox;
  std::uint64_t version = 0;
  VTime publish_time;
};

struct TickRecord {
  std::string stage;
  VTime time;
  bool skipped = false;  // tick dropped because the stage was still busy
  bool error = false;
  std::string error_text;
  std::vector<ConsumedInput> inputs;
  std::uint64_t out_version = 0;  // 0 = no publish from this tick
  VTime publish_time;
  double compute_wall_ms = 0.0;
};

struct ExecutionTrace {
  std::vector<TickRecord> records;
  VTime duration;
  std::int64_t env_steps = 0;
};

// Multi-rate run over the linear chain source -> stages[0] -> ... -> last.
// Stage rates must be strictly increasing along the chain. A stage that is
// mid-computation at its own tick drops that tick; consumers keep using the
// prior output. Coincident events order publishes first, then ticks in
// chain order (slow stage first).
ExecutionTrace run_pipeline(const ExecutorConfig& config, const std::vector<StageSpec>& stages,
                            const EnvHook& env);

// Serial baseline: every step runs each stage once, in order; per-step
// latency is the sum of stage costs.
ExecutionTrace run_synchronous(const std::vector<StageSpec>& stages, std::int64_t steps,
                               const EnvHook& env, const std::string& source_name = "camera");

struct StageMetrics {
  std::int64_t ticks = 0;
  std::int64_t skipped = 0;
  std::int64_t errors = 0;
  double achieved_rate_hz = 0.0;
  double mean_latency_ms = 0.0;
  double p50_latency_ms = 0.0;
  double p99_latency_ms = 0.0;
  // Age of consumed inputs in producer periods, keyed by mailbox.
  std::map<std::string, double> mean_staleness;
  std::map<std::string, double> max_staleness;
};

struct TraceMetrics {
  std::map<std::string, StageMetrics> stages;
  double mean_step_period_s = 0.0;   // between last-stage publishes
  double steps_per_second = 0.0;
  double mean_end_to_end_s = 0.0;    // source publish -> last-stage publish
};

TraceMetrics trace_metrics(const ExecutionTrace& trace, const std::vector<StageSpec>& stages,
                           const std::string& source_name = "camera");

// Line-delimited JSON trace records, one per tick.
void write_trace(const ExecutionTrace& trace, const std::string& path);

}  // namespace pivot::exec
