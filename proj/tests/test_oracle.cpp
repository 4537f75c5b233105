#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "spikemr/engine.hpp"
#include "spikemr/network.hpp"
#include "spikemr/oracle.hpp"
#include "spikemr/simjob.hpp"

using namespace spikemr;
using network::Kind;
using network::NeuronRecord;

namespace {

// A three-cell snapshot wired hot: everyone fires in round 0 and the large
// recurrent weights keep the volleys going, so a short run exercises charge
// delivery, resets and the thalamic path together. Small d keeps u from
// damping the loop.
network::Snapshot hot_snapshot(std::uint64_t seed) {
  auto cell = [](std::int64_t id, Kind kind, neuron::Params params,
                 std::vector<double> weights) {
    NeuronRecord rec;
    rec.id = id;
    rec.kind = kind;
    rec.params = params;
    rec.state = neuron::State{29.0, 0.0};
    rec.sum = 10.0;
    rec.iter = 0;
    rec.out_weights = std::move(weights);
    return rec;
  };
  network::Snapshot snap;
  snap.header = network::SnapshotHeader{3, 2, 1, 0, seed};
  snap.records = {
      cell(0, Kind::Excitatory, {0.02, 0.2, -65.0, 0.5}, {0.0, 60.0, 50.0}),
      cell(1, Kind::Excitatory, {0.02, 0.2, -65.0, 0.5}, {55.0, 0.0, 45.0}),
      cell(2, Kind::Inhibitory, {0.1, 0.2, -65.0, 2.0}, {-5.0, -4.0, -0.0}),
  };
  return snap;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("a fresh simulator holds the built population at iteration zero") {
  const network::PopulationSpec spec{6, 2, 31};
  oracle::Simulator sim(spec);
  CHECK(sim.iter() == 0);
  CHECK(sim.size() == 8);
  CHECK(network::render_snapshot(sim.snapshot()) ==
        network::render_snapshot(network::initial_snapshot(spec)));
}

TEST_CASE("oracle and engine rounds produce byte-identical snapshots and spikes") {
  const std::uint64_t seed = 77;
  oracle::Simulator sim(hot_snapshot(seed));

  engine::Engine engine(2);
  const network::Snapshot start = hot_snapshot(seed);
  std::vector<engine::KeyValue> inputs = simjob::records_to_inputs(start.records);
  std::vector<simjob::SpikeEvent> engine_spikes;

  for (std::int64_t round = 0; round < 12; ++round) {
    simjob::RoundConfig config;
    config.seed = seed;
    config.num_map_tasks = 1 + static_cast<int>(round % 3);
    config.num_reduce_tasks = 1 + static_cast<int>(round % 2);
    config.combiner = false;
    const simjob::RoundResult result = simjob::run_round(engine, inputs, round, config);

    sim.step_ms();
    CAPTURE(round);
    REQUIRE(simjob::snapshot_bytes(start.header, round + 1, result.outputs) ==
            sim.snapshot_text());
    engine_spikes.insert(engine_spikes.end(), result.spikes.begin(), result.spikes.end());
    inputs = result.outputs;
  }

  CHECK(engine_spikes == sim.spikes());
  // The wiring is hot enough that activity persists past the initial volley.
  std::size_t late = 0;
  for (const simjob::SpikeEvent& s : sim.spikes()) {
    if (s.iter > 0) ++late;
  }
  CHECK(sim.spikes().size() >= 6);
  CHECK(late > 0);
}

TEST_CASE("a freshly built population matches across both paths as well") {
  const network::PopulationSpec spec{12, 4, 9};
  oracle::Simulator sim(spec);

  engine::Engine engine(1);
  std::vector<engine::KeyValue> inputs =
      simjob::records_to_inputs(network::build_population(spec));
  const network::SnapshotHeader header{spec.total(), spec.n_exc, spec.n_inh, 0, spec.seed};

  for (std::int64_t round = 0; round < 15; ++round) {
    simjob::RoundConfig config;
    config.seed = spec.seed;
    config.num_map_tasks = 3;
    config.num_reduce_tasks = 2;
    const simjob::RoundResult result = simjob::run_round(engine, inputs, round, config);
    sim.step_ms();
    CAPTURE(round);
    REQUIRE(simjob::snapshot_bytes(header, round + 1, result.outputs) == sim.snapshot_text());
    inputs = result.outputs;
  }
}

TEST_CASE("resuming from a snapshot continues the exact trajectory") {
  oracle::Simulator full(hot_snapshot(5));
  full.run_ms(10);

  oracle::Simulator head(hot_snapshot(5));
  head.run_ms(6);
  oracle::Simulator tail(head.snapshot());
  CHECK(tail.iter() == 6);
  tail.run_ms(4);

  CHECK(tail.snapshot_text() == full.snapshot_text());
  // The resumed half only saw rounds 6..9.
  std::vector<simjob::SpikeEvent> expected;
  for (const simjob::SpikeEvent& s : full.spikes()) {
    if (s.iter >= 6) expected.push_back(s);
  }
  CHECK(tail.spikes() == expected);
}

TEST_CASE("delivered charge equals the recomputed weight totals bit for bit") {
  oracle::Simulator sim(hot_snapshot(21));
  int firing_rounds = 0;
  for (int round = 0; round < 6; ++round) {
    const network::Snapshot before = sim.snapshot();
    const std::size_t seen = sim.spikes().size();
    sim.step_ms();

    std::vector<std::int64_t> fired;
    for (std::size_t i = seen; i < sim.spikes().size(); ++i) {
      REQUIRE(sim.spikes()[i].iter == before.header.iter);
      fired.push_back(sim.spikes()[i].neuron_id);
    }
    if (!fired.empty()) ++firing_rounds;

    // Independent recomputation: ascending sources, zeros skipped.
    const std::int64_t n = before.header.n;
    for (std::int64_t m = 0; m < n; ++m) {
      double expect = 0.0;
      for (std::int64_t j : fired) {
        const double w = before.records[static_cast<std::size_t>(j)]
                             .out_weights[static_cast<std::size_t>(m)];
        if (w != 0.0) expect += w;
      }
      CAPTURE(round);
      CAPTURE(m);
      CHECK(sim.records()[static_cast<std::size_t>(m)].sum == expect);
    }
  }
  CHECK(firing_rounds >= 2);
}

TEST_CASE("traces sample the post-step state every millisecond") {
  oracle::Simulator sim(hot_snapshot(3));
  const std::vector<std::int64_t> ids{0, 2};
  sim.set_traced(ids);
  sim.run_ms(5);

  const auto& t0 = sim.trace(0);
  REQUIRE(t0.size() == 5);
  for (std::size_t i = 0; i < t0.size(); ++i) {
    CHECK(t0[i].iter == static_cast<std::int64_t>(i) + 1);
  }
  // The last sample is the current state.
  CHECK(t0.back().v == sim.records()[0].state.v);
  CHECK(t0.back().u == sim.records()[0].state.u);
  CHECK(sim.trace(2).size() == 5);

  CHECK_THROWS_AS(sim.trace(1), NotFoundError);
  const std::vector<std::int64_t> bad{7};
  CHECK_THROWS_AS(sim.set_traced(bad), ContractError);
}

TEST_CASE("simulate is the simulator run end to end") {
  const network::PopulationSpec spec{4, 2, 8};
  const std::vector<std::int64_t> traced{1};
  const oracle::SimResult result = oracle::simulate(spec, 7, traced);

  oracle::Simulator sim(spec);
  sim.set_traced(traced);
  sim.run_ms(7);
  CHECK(network::render_snapshot(result.final_snapshot) == sim.snapshot_text());
  CHECK(result.spikes == sim.spikes());
  REQUIRE(result.traces.count(1) == 1);
  CHECK(result.traces.at(1).size() == 7);
}

TEST_CASE("runaway state is reported, not propagated") {
  network::Snapshot snap = hot_snapshot(1);
  snap.records[1].state.v = 1.0e200;  // finite, so it parses; the step blows up
  oracle::Simulator sim(std::move(snap));
  CHECK_THROWS_AS(sim.step_ms(), DivergedError);

  // A reset target beyond the guard rail trips it too.
  network::Snapshot low = hot_snapshot(1);
  low.records[0].params.c = -2000.0;
  oracle::Simulator sim2(std::move(low));
  try {
    sim2.step_ms();
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.neuron_id == 0);
    CHECK(e.iter == 0);
  }
}

TEST_CASE("negative run counts are rejected") {
  oracle::Simulator sim(hot_snapshot(2));
  CHECK_THROWS_AS(sim.run_ms(-1), ContractError);
}

}  // TEST_SUITE
