#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "spikemr/network.hpp"
#include "spikemr/simjob.hpp"

// Single-process reference simulator.
//
// Advances the whole population in one loop with no MapReduce machinery,
// yet performs the floating-point work of each step in exactly the order
// the distributed path does: per-cell integration first, then charges
// accumulated per target in ascending source-id order. Snapshots rendered
// from this simulator are byte-identical to the engine's, which is the
// cross-validation lever the tests lean on.

namespace spikemr::oracle {

struct TraceSample {
  std::int64_t iter = 0;  // completed step (post-update state)
  double v = 0.0;
  double u = 0.0;
};

class Simulator {
 public:
  explicit Simulator(const network::PopulationSpec& spec);
  explicit Simulator(network::Snapshot snapshot);

  // Ids to sample (v, u) for after every subsequent step.
  void set_traced(std::span<const std::int64_t> ids);

  void step_ms();
  void run_ms(std::int64_t count);

  std::int64_t iter() const noexcept { return iter_; }
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(records_.size()); }
  const std::vector<network::NeuronRecord>& records() const noexcept { return records_; }
  const std::vector<simjob::SpikeEvent>& spikes() const noexcept { return spikes_; }

  const std::vector<TraceSample>& trace(std::int64_t id) const;  // NotFoundError if untraced

  network::Snapshot snapshot() const;
  // Snapshot text via the caching renderer (weights encoded once).
  std::string snapshot_text();

 private:
  network::SnapshotHeader header_;  // counts and seed; iter tracked separately
  std::vector<network::NeuronRecord> records_;
  std::vector<simjob::SpikeEvent> spikes_;
  std::map<std::int64_t, std::vector<TraceSample>> traces_;
  network::SnapshotRenderer renderer_;
  std::int64_t iter_ = 0;
};

struct SimResult {
  network::Snapshot final_snapshot;
  std::vector<simjob::SpikeEvent> spikes;
  std::map<std::int64_t, std::vector<TraceSample>> traces;
};

SimResult simulate(const network::PopulationSpec& spec, std::int64_t num_ms,
                   std::span<const std::int64_t> traced_ids = {});

}  // namespace spikemr::oracle
