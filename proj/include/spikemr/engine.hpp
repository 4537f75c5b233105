#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

// A deterministic in-process MapReduce engine.
//
// Determinism contract: for fixed inputs and job spec, outputs, side events
// and (injected-fault-free) reports are byte-identical regardless of thread
// count, task count changes being the caller's concern. The pieces that make
// this hold:
//   * input splits are contiguous ranges of the input vector, assigned to
//     map tasks in order;
//   * map emissions are kept per task and consumed in (task id, emission
//     index) order, never in completion order;
//   * each reduce group's values are optionally stable-sorted by a
//     job-supplied canonical key on top of that order;
//   * injected kills are a pure function of (fault seed, job id, phase,
//     task id, attempt), so a run can be replayed fault for fault.
// Side events are committed only from attempts that complete, which keeps
// retried work invisible in every output channel.

namespace spikemr::engine {

struct KeyValue {
  std::int64_t key = 0;
  std::uint8_t tag = 0;  // job-defined discriminator, opaque to the engine
  std::string payload;   // opaque to the engine
};

// Two-integer side record a mapper can log outside the key/value flow.
struct SideEvent {
  std::int64_t a = 0;
  std::int64_t b = 0;
};

class Emitter {
 public:
  virtual ~Emitter() = default;
  virtual void emit(std::int64_t key, std::uint8_t tag, std::string payload) = 0;
  virtual void side(std::int64_t a, std::int64_t b) = 0;
};

using MapFn = std::function<void(const KeyValue& input, Emitter& out)>;
// Combiner and reducer both fold one key's value list into a replacement
// list; the combiner runs per map task on local emissions only.
using CombineFn =
    std::function<std::vector<KeyValue>(std::int64_t key, std::vector<KeyValue>&& values)>;
using ReduceFn =
    std::function<std::vector<KeyValue>(std::int64_t key, std::vector<KeyValue>&& values)>;
// Canonical in-group value order: values arrive ordered by (map task id,
// emission index) and are then stable-sorted by this key when provided.
using CanonicalKeyFn = std::function<std::pair<int, std::int64_t>(const KeyValue&)>;

struct FaultPolicy {
  double kill_probability = 0.0;  // per-attempt chance of an injected kill, in [0, 0.9]
  int max_retries = 1;            // maximum attempts per task, >= 1
  std::uint64_t fault_seed = 0;
};

struct JobSpec {
  MapFn mapper;
  CombineFn combiner;            // optional
  ReduceFn reducer;
  CanonicalKeyFn canonical_key;  // optional
  int num_map_tasks = 1;
  int num_reduce_tasks = 1;
  FaultPolicy faults;
  std::int64_t job_id = 0;
};

enum class Phase : std::uint8_t {
  Map = 0,
  Reduce = 1,
};

struct TaskOutcome {
  Phase phase = Phase::Map;
  int task_id = 0;
  int attempts = 1;  // total attempts, including injected kills
  int injected_kills = 0;
  std::int64_t records_in = 0;
  std::int64_t records_out = 0;
};

struct JobReport {
  std::int64_t job_id = 0;
  std::vector<TaskOutcome> tasks;  // map tasks first, then reduce tasks
  std::int64_t input_records = 0;
  std::int64_t map_emissions = 0;   // before combining
  std::int64_t shuffled_pairs = 0;  // after combining
  std::int64_t shuffled_bytes = 0;
  std::int64_t output_records = 0;
  std::int64_t side_events = 0;
  int injected_kills = 0;
  double wall_ms = 0.0;
};

struct JobResult {
  std::vector<KeyValue> outputs;       // sorted by key
  std::vector<SideEvent> side_events;  // map task order, emission order within a task
  JobReport report;
};

// Deterministic kill decision for one task attempt (attempt numbers are
// 1-based). Exposed so tests and tools can predict injected faults.
bool kill_injected(const FaultPolicy& faults, std::int64_t job_id, Phase phase, int task_id,
                   int attempt);

std::int64_t partition_of(std::int64_t key, int num_reduce_tasks) noexcept;

class Engine {
 public:
  // `threads` is the worker count for task execution; 1 runs everything on
  // the calling thread. Results do not depend on this value.
  explicit Engine(int threads = 1);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  int threads() const noexcept { return threads_; }

  JobResult run_job(const std::vector<KeyValue>& inputs, const JobSpec& spec) const;

 private:
  class Pool;
  int threads_;
  std::unique_ptr<Pool> pool_;
};

// Storage hooks for chained jobs. When present, every round's outputs are
// stored and then loaded back as the next round's inputs, so each job
// consumes exactly what a restart from storage would see.
struct ChainIO {
  std::function<void(std::int64_t round, const std::vector<KeyValue>& outputs)> store;
  std::function<std::vector<KeyValue>(std::int64_t round)> load;
};

// Runs `num_rounds` jobs, feeding each round's outputs to the next.
// `make_round` builds the JobSpec for a 0-based round index; `on_round` (when
// set) observes each round's full result after it commits.
std::vector<KeyValue> run_chained(
    const Engine& engine, std::vector<KeyValue> inputs,
    const std::function<JobSpec(std::int64_t round)>& make_round, std::int64_t num_rounds,
    const std::function<void(std::int64_t round, const JobResult& result)>& on_round = {},
    const ChainIO* io = nullptr);

}  // namespace spikemr::engine
