#include "spikemr/engine.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "spikemr/errors.hpp"
#include "spikemr/rng.hpp"

namespace spikemr::engine {
namespace {

// Kill decisions use the same finalizer chain as the simulation draws but
// start from a distinct domain constant, so fault rolls can never collide
// with model randomness even under equal seeds.
constexpr std::uint64_t kFaultDomain = 0xFA17;

double fault_roll(const FaultPolicy& faults, std::int64_t job_id, Phase phase, int task_id,
                  int attempt) {
  std::uint64_t h = rng::mix64(faults.fault_seed + rng::kGolden);
  h = rng::mix64(h + rng::kGolden + kFaultDomain);
  h = rng::mix64(h + rng::kGolden + static_cast<std::uint64_t>(job_id));
  h = rng::mix64(h + rng::kGolden + static_cast<std::uint64_t>(phase));
  h = rng::mix64(h + rng::kGolden + static_cast<std::uint64_t>(task_id));
  h = rng::mix64(h + rng::kGolden + static_cast<std::uint64_t>(attempt));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string task_name(Phase phase, int task_id) {
  return (phase == Phase::Map ? std::string("map task ") : std::string("reduce task ")) +
         std::to_string(task_id);
}

class CollectingEmitter final : public Emitter {
 public:
  void emit(std::int64_t key, std::uint8_t tag, std::string payload) override {
    emissions.push_back(KeyValue{key, tag, std::move(payload)});
  }
  void side(std::int64_t a, std::int64_t b) override { sides.push_back(SideEvent{a, b}); }

  std::vector<KeyValue> emissions;
  std::vector<SideEvent> sides;
};

struct MapTaskResult {
  std::vector<KeyValue> emissions;  // post-combine
  std::vector<SideEvent> sides;
  TaskOutcome outcome;
  std::int64_t raw_emissions = 0;  // pre-combine
};

struct ReduceTaskResult {
  std::vector<KeyValue> outputs;
  TaskOutcome outcome;
};

// Runs the attempt loop shared by both phases: rolls for an injected kill
// before any work, retries up to max_retries attempts, and runs `body`
// exactly once on the first surviving attempt.
template <typename Body>
void run_attempts(const FaultPolicy& faults, std::int64_t job_id, Phase phase, int task_id,
                  TaskOutcome& outcome, Body&& body) {
  outcome.phase = phase;
  outcome.task_id = task_id;
  outcome.attempts = 0;
  outcome.injected_kills = 0;
  while (true) {
    if (outcome.attempts >= faults.max_retries) {
      throw JobError("retries exhausted after " + std::to_string(outcome.attempts) + " attempts",
                     job_id, task_name(phase, task_id));
    }
    ++outcome.attempts;
    if (faults.kill_probability > 0.0 &&
        fault_roll(faults, job_id, phase, task_id, outcome.attempts) < faults.kill_probability) {
      ++outcome.injected_kills;
      continue;  // the attempt dies before emitting anything
    }
    body();
    return;
  }
}

// Group one partition's pairs by key, preserving (task id, emission index)
// arrival order within each key. std::map keeps keys ascending.
std::map<std::int64_t, std::vector<KeyValue>> group_by_key(std::vector<KeyValue>&& bucket) {
  std::map<std::int64_t, std::vector<KeyValue>> groups;
  for (KeyValue& kv : bucket) {
    groups[kv.key].push_back(std::move(kv));
  }
  return groups;
}

void canonical_sort(std::vector<KeyValue>& values, const CanonicalKeyFn& canonical_key) {
  if (!canonical_key || values.size() < 2) return;
  // Extract each sort key once, then stable-sort indices by it.
  std::vector<std::pair<std::pair<int, std::int64_t>, std::size_t>> decorated;
  decorated.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    decorated.emplace_back(canonical_key(values[i]), i);
  }
  std::stable_sort(decorated.begin(), decorated.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<KeyValue> sorted;
  sorted.reserve(values.size());
  for (const auto& [key, index] : decorated) {
    (void)key;
    sorted.push_back(std::move(values[index]));
  }
  values = std::move(sorted);
}

}  // namespace

bool kill_injected(const FaultPolicy& faults, std::int64_t job_id, Phase phase, int task_id,
                   int attempt) {
  return faults.kill_probability > 0.0 &&
         fault_roll(faults, job_id, phase, task_id, attempt) < faults.kill_probability;
}

std::int64_t partition_of(std::int64_t key, int num_reduce_tasks) noexcept {
  const std::int64_t r = num_reduce_tasks;
  return ((key % r) + r) % r;
}

// --- worker pool -------------------------------------------------------------

class Engine::Pool {
 public:
  explicit Pool(int threads) {
    workers_.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (std::thread& w : workers_) w.join();
  }

  // Runs every task, blocking until all complete. Tasks must not throw.
  void run_batch(std::vector<std::function<void()>>& tasks) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (auto& task : tasks) queue_.push_back(&task);
      pending_ += tasks.size();
    }
    wake_.notify_all();
    std::unique_lock<std::mutex> lock(mutex_);
    drained_.wait(lock, [this] { return pending_ == 0; });
  }

 private:
  void worker_loop() {
    while (true) {
      std::function<void()>* task = nullptr;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_ && queue_.empty()) return;
        task = queue_.front();
        queue_.erase(queue_.begin());
      }
      (*task)();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (--pending_ == 0) drained_.notify_all();
      }
    }
  }

  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable drained_;
  std::vector<std::function<void()>*> queue_;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

Engine::Engine(int threads) : threads_(threads) {
  if (threads < 1) throw ContractError("Engine requires at least one thread");
  if (threads > 1) pool_ = std::make_unique<Pool>(threads);
}

Engine::~Engine() = default;

JobResult Engine::run_job(const std::vector<KeyValue>& inputs, const JobSpec& spec) const {
  // Runs one closure per task index, either inline or on the pool, capturing
  // exceptions per task. The lowest task index's exception is rethrown, so
  // the surfaced error does not depend on scheduling.
  const auto run_tasks = [this](std::size_t count, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(count);
    if (pool_ == nullptr) {
      for (std::size_t i = 0; i < count; ++i) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    } else {
      std::vector<std::function<void()>> tasks;
      tasks.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        tasks.push_back([i, &body, &errors] {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      }
      pool_->run_batch(tasks);
    }
    for (const std::exception_ptr& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  };

  if (!spec.mapper || !spec.reducer) {
    throw ContractError("job spec requires both a mapper and a reducer");
  }
  if (spec.num_map_tasks < 1 || spec.num_reduce_tasks < 1) {
    throw ContractError("job spec requires at least one task per phase");
  }
  if (spec.faults.kill_probability < 0.0 || spec.faults.kill_probability > 0.9) {
    throw ContractError("kill probability must lie in [0, 0.9]");
  }
  if (spec.faults.max_retries < 1) {
    throw ContractError("max retries must be at least 1");
  }

  const auto start_time = std::chrono::steady_clock::now();
  const std::int64_t n = static_cast<std::int64_t>(inputs.size());
  const int m_tasks = spec.num_map_tasks;
  const int r_tasks = spec.num_reduce_tasks;

  // --- map phase: contiguous splits, one result slot per task id ---
  std::vector<MapTaskResult> map_results(static_cast<std::size_t>(m_tasks));
  run_tasks(static_cast<std::size_t>(m_tasks), [&](std::size_t t) {
    MapTaskResult& result = map_results[t];
    const std::int64_t begin = n * static_cast<std::int64_t>(t) / m_tasks;
    const std::int64_t end = n * (static_cast<std::int64_t>(t) + 1) / m_tasks;
    result.outcome.records_in = end - begin;
    run_attempts(spec.faults, spec.job_id, Phase::Map, static_cast<int>(t), result.outcome, [&] {
      CollectingEmitter emitter;
      for (std::int64_t i = begin; i < end; ++i) {
        try {
          spec.mapper(inputs[static_cast<std::size_t>(i)], emitter);
        } catch (const Error&) {
          throw;
        } catch (const std::exception& e) {
          throw JobError(std::string("mapper failed: ") + e.what(), spec.job_id,
                         task_name(Phase::Map, static_cast<int>(t)));
        }
      }
      result.raw_emissions = static_cast<std::int64_t>(emitter.emissions.size());
      result.sides = std::move(emitter.sides);
      if (spec.combiner) {
        auto groups = group_by_key(std::move(emitter.emissions));
        std::vector<KeyValue> combined;
        for (auto& [key, values] : groups) {
          std::vector<KeyValue> folded = spec.combiner(key, std::move(values));
          for (KeyValue& kv : folded) combined.push_back(std::move(kv));
        }
        result.emissions = std::move(combined);
      } else {
        result.emissions = std::move(emitter.emissions);
      }
      result.outcome.records_out = static_cast<std::int64_t>(result.emissions.size());
    });
  });

  // --- shuffle: one serial pass in (task id, emission index) order ---
  std::vector<std::vector<KeyValue>> buckets(static_cast<std::size_t>(r_tasks));
  std::int64_t map_emissions = 0;
  std::int64_t shuffled_pairs = 0;
  std::int64_t shuffled_bytes = 0;
  for (MapTaskResult& result : map_results) {
    map_emissions += result.raw_emissions;
    for (KeyValue& kv : result.emissions) {
      shuffled_pairs += 1;
      shuffled_bytes += static_cast<std::int64_t>(kv.payload.size()) + 9;
      buckets[static_cast<std::size_t>(partition_of(kv.key, r_tasks))].push_back(std::move(kv));
    }
    result.emissions.clear();
    result.emissions.shrink_to_fit();
  }

  // --- reduce phase: one task per partition, keys ascending within it ---
  std::vector<ReduceTaskResult> reduce_results(static_cast<std::size_t>(r_tasks));
  run_tasks(static_cast<std::size_t>(r_tasks), [&](std::size_t p) {
    ReduceTaskResult& result = reduce_results[p];
    run_attempts(spec.faults, spec.job_id, Phase::Reduce, static_cast<int>(p), result.outcome,
                 [&] {
                   auto groups = group_by_key(std::move(buckets[p]));
                   for (auto& [key, values] : groups) {
                     result.outcome.records_in += static_cast<std::int64_t>(values.size());
                     canonical_sort(values, spec.canonical_key);
                     std::vector<KeyValue> folded;
                     try {
                       folded = spec.reducer(key, std::move(values));
                     } catch (const Error&) {
                       throw;
                     } catch (const std::exception& e) {
                       throw JobError(std::string("reducer failed: ") + e.what(), spec.job_id,
                                      task_name(Phase::Reduce, static_cast<int>(p)));
                     }
                     for (KeyValue& kv : folded) result.outputs.push_back(std::move(kv));
                   }
                   result.outcome.records_out = static_cast<std::int64_t>(result.outputs.size());
                 });
  });

  // --- assemble the result ---
  JobResult job;
  job.report.job_id = spec.job_id;
  job.report.input_records = n;
  job.report.map_emissions = map_emissions;
  job.report.shuffled_pairs = shuffled_pairs;
  job.report.shuffled_bytes = shuffled_bytes;
  for (MapTaskResult& result : map_results) {
    job.report.tasks.push_back(result.outcome);
    job.report.injected_kills += result.outcome.injected_kills;
    for (const SideEvent& s : result.sides) job.side_events.push_back(s);
  }
  std::size_t total_outputs = 0;
  for (const ReduceTaskResult& result : reduce_results) total_outputs += result.outputs.size();
  job.outputs.reserve(total_outputs);
  for (ReduceTaskResult& result : reduce_results) {
    job.report.tasks.push_back(result.outcome);
    job.report.injected_kills += result.outcome.injected_kills;
    for (KeyValue& kv : result.outputs) job.outputs.push_back(std::move(kv));
  }
  std::stable_sort(job.outputs.begin(), job.outputs.end(),
                   [](const KeyValue& x, const KeyValue& y) { return x.key < y.key; });
  job.report.output_records = static_cast<std::int64_t>(job.outputs.size());
  job.report.side_events = static_cast<std::int64_t>(job.side_events.size());
  job.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time)
          .count();
  return job;
}

std::vector<KeyValue> run_chained(
    const Engine& engine, std::vector<KeyValue> inputs,
    const std::function<JobSpec(std::int64_t round)>& make_round, std::int64_t num_rounds,
    const std::function<void(std::int64_t round, const JobResult& result)>& on_round,
    const ChainIO* io) {
  if (!make_round) throw ContractError("run_chained requires a round factory");
  if (num_rounds < 0) throw ContractError("run_chained requires a non-negative round count");
  if (io != nullptr && (!io->store || !io->load)) {
    throw ContractError("ChainIO requires both store and load hooks");
  }
  for (std::int64_t round = 0; round < num_rounds; ++round) {
    JobResult result = engine.run_job(inputs, make_round(round));
    if (io != nullptr) {
      io->store(round, result.outputs);
      inputs = io->load(round);
    } else {
      inputs = std::move(result.outputs);
    }
    if (on_round) on_round(round, result);
  }
  return inputs;
}

}  // namespace spikemr::engine
