#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spikemr/engine.hpp"
#include "spikemr/network.hpp"

// The network step expressed as one MapReduce round.
//
// Inputs are the N record lines of iteration k, keyed by neuron id. The
// mapper integrates its cell by 1 ms (consuming the record's accumulated
// charge), emits charges keyed by target id if the cell fired, resets it,
// and re-emits the advanced record. The reducer folds each target's
// incoming charges into the record's sum field, producing iteration k+1.
// Spike occurrences travel on the engine's side channel as (iter, id).
//
// Charges for one target are summed in ascending source-id order (the
// job's canonical value order), which pins the floating-point result for
// any task layout. With the optional combiner, each map task pre-folds its
// local charges per target (again in ascending source order) into one
// partial sum tagged source -1; sums then differ from the uncombined run
// only by association, never by operand order.

namespace spikemr::simjob {

inline constexpr std::uint8_t kTagRecord = 0;
inline constexpr std::uint8_t kTagCharge = 1;

// Charge payload: amount \t source. Source -1 marks a combined partial sum.
struct Charge {
  double amount = 0.0;
  std::int64_t source = -1;
};

struct SpikeEvent {
  std::int64_t iter = 0;
  std::int64_t neuron_id = 0;
  friend auto operator<=>(const SpikeEvent&, const SpikeEvent&) = default;
};

using MessageValue = std::variant<network::NeuronRecord, Charge>;

struct Emission {
  std::int64_t key = 0;
  MessageValue value;
};

std::string render_charge(const Charge& charge);
Charge parse_charge(std::string_view text);

// Thalamic input scale by cell kind: 5 for excitatory, 2 for inhibitory.
double thalamic_scale(network::Kind kind) noexcept;

// --- value-level operators ---------------------------------------------------
// These wrap the wire-level implementations used inside the engine, so both
// views of the job share one code path.

struct MapResult {
  std::vector<Emission> emissions;  // charges first, advanced record last
  bool fired = false;
};

// One cell, one millisecond. `iter` is the round index; the record's own
// iter must match it or the round is inconsistent (IntegrityError).
MapResult map_neuron(const network::NeuronRecord& record, std::uint64_t seed, std::int64_t iter);

// Folds local charges for one target into a single partial sum; records
// pass through unchanged.
std::vector<MessageValue> combine_charges(std::int64_t key, std::vector<MessageValue> values);

// Exactly one record plus any charges -> that record with sum filled in.
network::NeuronRecord reduce_neuron(std::int64_t key, std::vector<MessageValue> values);

// --- engine wiring -----------------------------------------------------------

struct RoundConfig {
  std::uint64_t seed = 0;
  int num_map_tasks = 1;
  int num_reduce_tasks = 1;
  bool combiner = false;
  engine::FaultPolicy faults;
};

// Job spec for the round that advances iteration `iter` to `iter` + 1.
// job_id is the round index, so fault decisions vary across rounds.
engine::JobSpec make_job(std::int64_t iter, const RoundConfig& config);

struct RoundResult {
  std::vector<engine::KeyValue> outputs;  // iteration k+1 records, sorted by id
  std::vector<SpikeEvent> spikes;         // this round's firings, ascending id
  engine::JobReport report;
};

RoundResult run_round(const engine::Engine& engine, const std::vector<engine::KeyValue>& inputs,
                      std::int64_t iter, const RoundConfig& config);

// --- record/wire conversions -------------------------------------------------

std::vector<engine::KeyValue> records_to_inputs(const std::vector<network::NeuronRecord>& records);
std::vector<network::NeuronRecord> outputs_to_records(const std::vector<engine::KeyValue>& outputs,
                                                      std::int64_t expect_n = -1);

// Snapshot text assembled directly from round outputs (no re-rendering).
std::string snapshot_bytes(network::SnapshotHeader header, std::int64_t iter,
                           const std::vector<engine::KeyValue>& outputs);

// Light decode of snapshot text into round inputs: header fully validated,
// record lines checked only for id agreement (the mapper validates the rest
// on first touch).
struct SnapshotInputs {
  network::SnapshotHeader header;
  std::vector<engine::KeyValue> inputs;
};
SnapshotInputs inputs_from_snapshot_text(std::string_view text);

}  // namespace spikemr::simjob
