#include "spikemr/oracle.hpp"

#include <cmath>
#include <utility>

#include "spikemr/errors.hpp"
#include "spikemr/rng.hpp"

namespace spikemr::oracle {

Simulator::Simulator(const network::PopulationSpec& spec) {
  header_ = network::SnapshotHeader{spec.total(), spec.n_exc, spec.n_inh, 0, spec.seed};
  records_ = network::build_population(spec);
  iter_ = 0;
}

Simulator::Simulator(network::Snapshot snapshot)
    : header_(snapshot.header), records_(std::move(snapshot.records)), iter_(snapshot.header.iter) {}

void Simulator::set_traced(std::span<const std::int64_t> ids) {
  for (std::int64_t id : ids) {
    if (id < 0 || id >= size()) {
      throw ContractError("traced id " + std::to_string(id) + " is outside the population");
    }
    traces_.try_emplace(id);
  }
}

void Simulator::step_ms() {
  const std::int64_t n = size();
  std::vector<std::int64_t> fired_ids;

  // Integrate every cell on its accumulated charge, then clear the
  // accumulator. Matches the map side: the fire check follows the update.
  for (std::int64_t i = 0; i < n; ++i) {
    network::NeuronRecord& rec = records_[static_cast<std::size_t>(i)];
    const double thalamic =
        simjob::thalamic_scale(rec.kind) *
        rng::uniform01({header_.seed, rng::Stream::Thalamic, static_cast<std::uint64_t>(i),
                        static_cast<std::uint64_t>(iter_), 0});
    const double current = thalamic + rec.sum;
    rec.state = neuron::step(rec.state, rec.params, {current}, i, iter_);
    rec.sum = 0.0;
    if (neuron::fired(rec.state)) fired_ids.push_back(i);
  }

  // Deliver charges target by target in ascending source order — the same
  // operand order the reduce side uses — then reset the fired cells.
  std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t j : fired_ids) {
    spikes_.push_back(simjob::SpikeEvent{iter_, j});
    const std::vector<double>& weights = records_[static_cast<std::size_t>(j)].out_weights;
    for (std::int64_t m = 0; m < n; ++m) {
      const double w = weights[static_cast<std::size_t>(m)];
      if (w != 0.0) sums[static_cast<std::size_t>(m)] += w;
    }
  }
  for (std::int64_t j : fired_ids) {
    network::NeuronRecord& rec = records_[static_cast<std::size_t>(j)];
    rec.state = neuron::reset(rec.state, rec.params);
  }

  for (std::int64_t i = 0; i < n; ++i) {
    network::NeuronRecord& rec = records_[static_cast<std::size_t>(i)];
    rec.sum = sums[static_cast<std::size_t>(i)];
    rec.iter = iter_ + 1;
    if (std::fabs(rec.state.v) > 1000.0) {
      throw DivergedError(i, iter_, rec.state.v, rec.state.u);
    }
  }

  ++iter_;
  for (auto& [id, samples] : traces_) {
    const network::NeuronRecord& rec = records_[static_cast<std::size_t>(id)];
    samples.push_back(TraceSample{iter_, rec.state.v, rec.state.u});
  }
}

void Simulator::run_ms(std::int64_t count) {
  if (count < 0) throw ContractError("run_ms requires a non-negative step count");
  for (std::int64_t i = 0; i < count; ++i) step_ms();
}

const std::vector<TraceSample>& Simulator::trace(std::int64_t id) const {
  const auto it = traces_.find(id);
  if (it == traces_.end()) {
    throw NotFoundError("no trace recorded for neuron " + std::to_string(id));
  }
  return it->second;
}

network::Snapshot Simulator::snapshot() const {
  network::Snapshot snap;
  snap.header = header_;
  snap.header.iter = iter_;
  snap.records = records_;
  return snap;
}

std::string Simulator::snapshot_text() {
  network::SnapshotHeader header = header_;
  header.iter = iter_;
  return renderer_.render(header, records_);
}

SimResult simulate(const network::PopulationSpec& spec, std::int64_t num_ms,
                   std::span<const std::int64_t> traced_ids) {
  Simulator sim(spec);
  sim.set_traced(traced_ids);
  sim.run_ms(num_ms);
  SimResult result;
  result.final_snapshot = sim.snapshot();
  result.spikes = sim.spikes();
  for (std::int64_t id : traced_ids) result.traces[id] = sim.trace(id);
  return result;
}

}  // namespace spikemr::oracle
