#include "pivot/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <thread>

namespace pivot::exec {

namespace {

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  while (b != 0) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

}  // namespace

VTime VTime::of(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw std::invalid_argument("VTime: denominator must be positive");
  const std::int64_t g = num == 0 ? den : gcd64(num, den);
  return {num / g, den / g};
}

VTime VTime::operator+(const VTime& o) const {
  __int128 n = static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den;
  __int128 d = static_cast<__int128>(den) * o.den;
  // Reduce in 128 bits before narrowing.
  __int128 a = n < 0 ? -n : n, b = d;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a == 0) a = 1;
  n /= a;
  d /= a;
  if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) {
    throw std::overflow_error("VTime: rational overflow");
  }
  return {static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)};
}

VTime VTime::operator-(const VTime& o) const { return *this + VTime{-o.num, o.den}; }

bool VTime::operator<(const VTime& o) const {
  return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
}

namespace {

constexpr int kPublishKind = 0;
constexpr int kTickKind = 1;

struct Event {
  VTime time;
  int kind = kTickKind;
  int stage = 0;
  std::uint64_t seq = 0;
  Value payload;              // publish events carry the value
  std::size_t record_index = 0;  // publish events point back at their tick record

  bool operator>(const Event& o) const {
    if (time != o.time) return o.time < time;
    if (kind != o.kind) return kind > o.kind;
    if (stage != o.stage) return stage > o.stage;
    return seq > o.seq;
  }
};

void validate_chain(const std::vector<StageSpec>& stages) {
  if (stages.empty()) throw std::invalid_argument("executor: need at least one stage");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].rate_hz <= 0) throw std::invalid_argument("executor: rates must be positive");
    if (!stages[i].compute) throw std::invalid_argument("executor: stage missing compute fn");
    if (i > 0 && stages[i - 1].rate_hz >= stages[i].rate_hz) {
      throw std::invalid_argument("executor: stage rates must strictly increase along the chain");
    }
  }
}

Inputs snapshot_inputs(const StageSpec& spec, std::map<std::string, Mailbox>& boxes,
                       TickRecord& rec) {
  Inputs in;
  for (const auto& name : spec.inputs) {
    Versioned v = boxes[name].read();
    rec.inputs.push_back({name, v.version, v.publish_time});
    in.emplace(name, std::move(v));
  }
  return in;
}

}  // namespace

ExecutionTrace run_pipeline_realtime(const ExecutorConfig& config,
                                     const std::vector<StageSpec>& stages, const EnvHook& env);

ExecutionTrace run_pipeline(const ExecutorConfig& config, const std::vector<StageSpec>& stages,
                            const EnvHook& env) {
  validate_chain(stages);
  if (config.mode == ExecMode::Synchronous) {
    throw std::invalid_argument("run_pipeline: use run_synchronous for the serial baseline");
  }
  if (config.mode == ExecMode::RealClock) {
    return run_pipeline_realtime(config, stages, env);
  }

  ExecutionTrace trace;
  trace.duration = config.duration;
  std::map<std::string, Mailbox> boxes;
  boxes[config.source_name];
  for (const auto& s : stages) boxes[s.name];
  if (env.initial) boxes[config.source_name].publish(env.initial(), VTime::zero());

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
  std::uint64_t seq = 0;
  std::vector<VTime> busy_until(stages.size(), VTime::zero());
  std::vector<std::int64_t> tick_index(stages.size(), 0);

  auto schedule_tick = [&](int i) {
    const VTime t = VTime::of(tick_index[i], stages[i].rate_hz);
    ++tick_index[i];
    if (t < config.duration) queue.push({t, kTickKind, i, seq++, nullptr, 0});
  };
  for (std::size_t i = 0; i < stages.size(); ++i) schedule_tick(static_cast<int>(i));

  bool stopped = false;
  while (!queue.empty() && !stopped) {
    Event ev = queue.top();
    queue.pop();

    if (ev.kind == kPublishKind) {
      boxes[stages[ev.stage].name].publish(ev.payload, ev.time);
      auto& rec = trace.records[ev.record_index];
      rec.out_version = boxes[stages[ev.stage].name].read().version;
      rec.publish_time = ev.time;
      if (static_cast<std::size_t>(ev.stage) + 1 == stages.size()) {
        ++trace.env_steps;
        if (env.step) {
          Value next = env.step(ev.payload, ev.time);
          if (!next) {
            stopped = true;
          } else {
            boxes[config.source_name].publish(std::move(next), ev.time);
          }
        }
      }
      continue;
    }

    const int i = ev.stage;
    const StageSpec& spec = stages[i];
    TickRecord rec;
    rec.stage = spec.name;
    rec.time = ev.time;

    if (ev.time < busy_until[i]) {
      rec.skipped = true;
      trace.records.push_back(std::move(rec));
      schedule_tick(i);
      continue;
    }

    Inputs in = snapshot_inputs(spec, boxes, rec);
    const auto wall0 = std::chrono::steady_clock::now();
    Value out;
    try {
      out = spec.compute(in);
    } catch (const std::exception& e) {
      rec.error = true;
      rec.error_text = e.what();
    }
    rec.compute_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();
    busy_until[i] = ev.time + spec.sim_cost;

    trace.records.push_back(std::move(rec));
    if (!trace.records.back().error && out) {
      queue.push({busy_until[i], kPublishKind, i, seq++, std::move(out),
                  trace.records.size() - 1});
    }
    schedule_tick(i);
  }
  return trace;
}

// ------------------------------------------------------------- real clock

ExecutionTrace run_pipeline_realtime(const ExecutorConfig& config,
                                     const std::vector<StageSpec>& stages, const EnvHook& env) {
  using Clock = std::chrono::steady_clock;

  std::map<std::string, Mailbox> boxes;
  boxes[config.source_name];
  for (const auto& s : stages) boxes[s.name];
  if (env.initial) boxes[config.source_name].publish(env.initial(), VTime::zero());

  struct Shared {
    std::mutex mutex;
    std::vector<TickRecord> records;
    std::atomic<bool> stop{false};
    std::atomic<std::int64_t> env_steps{0};
  } shared;

  const auto start = Clock::now();
  const double duration_s = config.duration.to_seconds();
  auto to_vtime = [&](Clock::time_point tp) {
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(tp - start).count();
    return VTime::of(us, 1000000);
  };

  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    threads.emplace_back([&, i] {
      const StageSpec& spec = stages[i];
      const bool is_last = i + 1 == stages.size();
      std::int64_t k = 0;
      while (!shared.stop.load(std::memory_order_relaxed)) {
        const double target_s = static_cast<double>(k) / static_cast<double>(spec.rate_hz);
        if (target_s >= duration_s) break;
        const auto target = start + std::chrono::duration_cast<Clock::duration>(
                                        std::chrono::duration<double>(target_s));
        std::this_thread::sleep_until(target);
        if (shared.stop.load(std::memory_order_relaxed)) break;

        TickRecord rec;
        rec.stage = spec.name;
        rec.time = to_vtime(Clock::now());
        Inputs in = snapshot_inputs(spec, boxes, rec);
        const auto wall0 = Clock::now();
        Value out;
        try {
          out = spec.compute(in);
        } catch (const std::exception& e) {
          rec.error = true;
          rec.error_text = e.what();
        }
        rec.compute_wall_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - wall0).count();

        if (!rec.error && out) {
          const VTime now = to_vtime(Clock::now());
          boxes[spec.name].publish(out, now);
          rec.out_version = boxes[spec.name].read().version;
          rec.publish_time = now;
          if (is_last) {
            shared.env_steps.fetch_add(1);
            if (env.step) {
              Value next = env.step(out, now);
              if (!next) {
                shared.stop.store(true);
              } else {
                boxes[config.source_name].publish(std::move(next), to_vtime(Clock::now()));
              }
            }
          }
        }
        {
          std::lock_guard lock(shared.mutex);
          shared.records.push_back(std::move(rec));
        }
        // Missed ticks are dropped, not queued.
        const double elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
        const std::int64_t next_k =
            static_cast<std::int64_t>(std::ceil(elapsed_s * static_cast<double>(spec.rate_hz)));
        k = std::max(k + 1, next_k);
      }
    });
  }
  for (auto& t : threads) t.join();

  ExecutionTrace trace;
  trace.duration = config.duration;
  trace.env_steps = shared.env_steps.load();
  trace.records = std::move(shared.records);
  std::stable_sort(trace.records.begin(), trace.records.end(),
                   [](const TickRecord& a, const TickRecord& b) { return a.time < b.time; });
  return trace;
}

// ------------------------------------------------------------ synchronous

ExecutionTrace run_synchronous(const std::vector<StageSpec>& stages, std::int64_t steps,
                               const EnvHook& env, const std::string& source_name) {
  validate_chain(stages);
  ExecutionTrace trace;
  std::map<std::string, Mailbox> boxes;
  boxes[source_name];
  for (const auto& s : stages) boxes[s.name];
  if (env.initial) boxes[source_name].publish(env.initial(), VTime::zero());

  VTime now = VTime::zero();
  for (std::int64_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const StageSpec& spec = stages[i];
      TickRecord rec;
      rec.stage = spec.name;
      rec.time = now;
      Inputs in = snapshot_inputs(spec, boxes, rec);
      const auto wall0 = std::chrono::steady_clock::now();
      Value out;
      try {
        out = spec.compute(in);
      } catch (const std::exception& e) {
        rec.error = true;
        rec.error_text = e.what();
      }
      rec.compute_wall_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - wall0)
                                .count();
      now = now + spec.sim_cost;
      if (rec.error) {
        // A failed stage aborts the step; later stages do not run.
        trace.records.push_back(std::move(rec));
        break;
      }
      boxes[spec.name].publish(out, now);
      rec.out_version = boxes[spec.name].read().version;
      rec.publish_time = now;
      const bool is_last = i + 1 == stages.size();
      trace.records.push_back(std::move(rec));
      if (is_last) {
        ++trace.env_steps;
        if (env.step) {
          Value next = env.step(out, now);
          if (!next) {
            trace.duration = now;
            return trace;
          }
          boxes[source_name].publish(std::move(next), now);
        }
      }
    }
  }
  trace.duration = now;
  return trace;
}

// ----------------------------------------------------------------- metrics

namespace {

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

TraceMetrics trace_metrics(const ExecutionTrace& trace, const std::vector<StageSpec>& stages,
                           const std::string& source_name) {
  if (trace.records.empty()) throw std::invalid_argument("trace_metrics: empty trace");
  TraceMetrics out;

  std::map<std::string, double> producer_period;
  // The source mailbox refreshes on last-stage publishes.
  producer_period[source_name] = 1.0 / static_cast<double>(stages.back().rate_hz);
  for (const auto& s : stages) producer_period[s.name] = 1.0 / static_cast<double>(s.rate_hz);

  std::map<std::string, std::vector<double>> latencies;
  std::map<std::string, std::map<std::string, std::pair<double, std::int64_t>>> stale_acc;
  std::map<std::string, std::map<std::string, double>> stale_max;

  for (const auto& rec : trace.records) {
    auto& sm = out.stages[rec.stage];
    ++sm.ticks;
    if (rec.skipped) {
      ++sm.skipped;
      continue;
    }
    if (rec.error) ++sm.errors;
    latencies[rec.stage].push_back(rec.compute_wall_ms);
    for (const auto& ci : rec.inputs) {
      if (ci.version == 0) continue;  // nothing published yet
      const double age_s = (rec.time - ci.publish_time).to_seconds();
      const double periods = age_s / producer_period[ci.mailbox];
      auto& acc = stale_acc[rec.stage][ci.mailbox];
      acc.first += periods;
      acc.second += 1;
      auto& mx = stale_max[rec.stage][ci.mailbox];
      mx = std::max(mx, periods);
    }
  }
  for (auto& [stage, sm] : out.stages) {
    auto& lat = latencies[stage];
    if (!lat.empty()) {
      sm.mean_latency_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / lat.size();
      sm.p50_latency_ms = percentile(lat, 0.50);
      sm.p99_latency_ms = percentile(lat, 0.99);
    }
    const double dur = trace.duration.to_seconds();
    if (dur > 0.0) sm.achieved_rate_hz = static_cast<double>(sm.ticks - sm.skipped) / dur;
    for (const auto& [mb, acc] : stale_acc[stage]) {
      sm.mean_staleness[mb] = acc.second > 0 ? acc.first / acc.second : 0.0;
      sm.max_staleness[mb] = stale_max[stage][mb];
    }
  }

  // Step period and end-to-end latency over the final stage's publishes.
  const std::string& last = stages.back().name;
  std::vector<const TickRecord*> publishes;
  std::map<std::pair<std::string, std::uint64_t>, const TickRecord*> by_version;
  for (const auto& rec : trace.records) {
    if (!rec.skipped && !rec.error && rec.out_version > 0) {
      by_version[{rec.stage, rec.out_version}] = &rec;
      if (rec.stage == last) publishes.push_back(&rec);
    }
  }
  if (publishes.size() >= 2) {
    double acc = 0.0;
    for (std::size_t i = 1; i < publishes.size(); ++i) {
      acc += (publishes[i]->publish_time - publishes[i - 1]->publish_time).to_seconds();
    }
    out.mean_step_period_s = acc / static_cast<double>(publishes.size() - 1);
    if (out.mean_step_period_s > 0.0) out.steps_per_second = 1.0 / out.mean_step_period_s;
  }

  double e2e_acc = 0.0;
  std::int64_t e2e_n = 0;
  for (const auto* rec : publishes) {
    // Walk the consumed-version chain back to the source publish.
    const TickRecord* cur = rec;
    VTime origin = cur->publish_time;
    bool ok = true;
    while (ok) {
      ok = false;
      for (const auto& ci : cur->inputs) {
        if (ci.mailbox == source_name) {
          origin = ci.publish_time;
          break;
        }
        auto it = by_version.find({ci.mailbox, ci.version});
        if (it != by_version.end()) {
          cur = it->second;
          ok = true;
          break;
        }
      }
    }
    e2e_acc += (rec->publish_time - origin).to_seconds();
    ++e2e_n;
  }
  if (e2e_n > 0) out.mean_end_to_end_s = e2e_acc / static_cast<double>(e2e_n);
  return out;
}

void write_trace(const ExecutionTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_trace: cannot open '" + path + "'");
  for (const auto& rec : trace.records) {
    nlohmann::json j{{"stage", rec.stage},
                     {"t_num", rec.time.num},
                     {"t_den", rec.time.den},
                     {"t", rec.time.to_seconds()},
                     {"skipped", rec.skipped},
                     {"error", rec.error},
                     {"out_version", rec.out_version},
                     {"publish_t", rec.publish_time.to_seconds()},
                     {"wall_ms", rec.compute_wall_ms}};
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& ci : rec.inputs) {
      inputs.push_back(nlohmann::json{{"mailbox", ci.mailbox},
                                      {"version", ci.version},
                                      {"publish_t", ci.publish_time.to_seconds()}});
    }
    j["inputs"] = std::move(inputs);
    if (rec.error) j["error_text"] = rec.error_text;
    out << j.dump() << '\n';
  }
}

}  // namespace pivot::exec
