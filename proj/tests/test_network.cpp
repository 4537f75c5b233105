#include "doctest.h"

#include <bit>
#include <cfloat>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikemr/network.hpp"
#include "spikemr/rng.hpp"

using namespace spikemr;
using network::Kind;
using network::NeuronRecord;
using network::PopulationSpec;
using network::Snapshot;

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

NeuronRecord sample_record() {
  NeuronRecord rec;
  rec.id = 3;
  rec.kind = Kind::Excitatory;
  rec.params = neuron::Params{0.02, 0.2, -55.1234, 4.5};
  rec.state = neuron::State{-60.25, -12.75};
  rec.sum = 1.5e-3;
  rec.iter = 7;
  rec.out_weights = {0.1, 0.0, 0.25, 0.4999999999999999};
  return rec;
}

}  // namespace

TEST_SUITE("network") {

// Builder golden values, frozen from an independent implementation of the
// documented draw layout (draw 0 -> heterogeneity r, draw m+1 -> weight to
// target m).
TEST_CASE("population construction matches frozen values for seed 42") {
  const PopulationSpec spec{800, 200, 42};
  const std::vector<NeuronRecord> records = network::build_population(spec);
  REQUIRE(records.size() == 1000);

  const NeuronRecord& exc = records[0];
  CHECK(exc.kind == Kind::Excitatory);
  CHECK(exc.params.a == 0.02);
  CHECK(exc.params.b == 0.2);
  CHECK(bits(exc.params.c) == 0xc04bbfa0df62e217ull);  // -55.49709694221763
  CHECK(bits(exc.params.d) == 0x4010cb9c646fa049ull);  // 4.198838776887052
  CHECK(exc.state.v == -65.0);
  CHECK(bits(exc.state.u) == 0xc02a000000000000ull);  // 0.2 * -65 = -13
  CHECK(exc.sum == 0.0);
  CHECK(exc.iter == 0);
  REQUIRE(exc.out_weights.size() == 1000);
  CHECK(bits(exc.out_weights[0]) == 0x3fd6405e4d86c8b8ull);  // 0.34767873354861534
  CHECK(bits(exc.out_weights[2]) == 0x3fd095660231fbd7ull);  // 0.25911855902080333

  const NeuronRecord& inh = records[800];
  CHECK(inh.kind == Kind::Inhibitory);
  CHECK(bits(inh.params.a) == 0x3fb26fc6b0c9a563ull);  // 0.07201806846719232
  CHECK(bits(inh.params.b) == 0x3fcbd6ab825a95eaull);  // 0.21748870720800478
  CHECK(inh.params.c == -65.0);
  CHECK(inh.params.d == 2.0);
  CHECK(bits(inh.state.u) == 0xc02c460630640042ull);  // b * -65
  REQUIRE(inh.out_weights.size() == 1000);
  CHECK(bits(inh.out_weights[0]) == 0xbfee9547685b01d3ull);  // -0.9557225263779919

  // Sign layout: excitatory rows non-negative, inhibitory rows non-positive.
  for (double w : exc.out_weights) CHECK(w >= 0.0);
  for (double w : inh.out_weights) CHECK(w <= 0.0);
}

TEST_CASE("construction rejects empty or negative populations") {
  CHECK_THROWS_AS(network::build_population(PopulationSpec{0, 0, 1}), UsageError);
  CHECK_THROWS_AS(network::build_population(PopulationSpec{-1, 2, 1}), UsageError);
}

TEST_CASE("shortest round-trip double codec is bit-exact") {
  const double cases[] = {0.0,
                          -0.0,
                          0.1,
                          1.0 / 3.0,
                          -65.0,
                          1e-300,
                          5e-324,  // smallest subnormal
                          DBL_MAX,
                          DBL_MIN,
                          4503599627370497.0,  // 2^52 + 1
                          -13.01122,
                          0.4999999999999999};
  for (double x : cases) {
    CAPTURE(x);
    CHECK(bits(network::parse_double(network::format_double(x))) == bits(x));
  }
}

TEST_CASE("record line round trip preserves every field bit for bit") {
  const NeuronRecord rec = sample_record();
  const NeuronRecord back = network::parse_record_line(network::render_record_line(rec), 4);
  CHECK(back.id == rec.id);
  CHECK(back.kind == rec.kind);
  CHECK(bits(back.params.a) == bits(rec.params.a));
  CHECK(bits(back.params.b) == bits(rec.params.b));
  CHECK(bits(back.params.c) == bits(rec.params.c));
  CHECK(bits(back.params.d) == bits(rec.params.d));
  CHECK(bits(back.state.v) == bits(rec.state.v));
  CHECK(bits(back.state.u) == bits(rec.state.u));
  CHECK(bits(back.sum) == bits(rec.sum));
  CHECK(back.iter == rec.iter);
  REQUIRE(back.out_weights.size() == rec.out_weights.size());
  for (std::size_t i = 0; i < rec.out_weights.size(); ++i) {
    CHECK(bits(back.out_weights[i]) == bits(rec.out_weights[i]));
  }
}

TEST_CASE("rendering is stable: render(parse(line)) == line") {
  const std::string line = network::render_record_line(sample_record());
  CHECK(network::render_record_line(network::parse_record_line(line)) == line);
}

TEST_CASE("prefix parse exposes the weights untouched") {
  const NeuronRecord rec = sample_record();
  const std::string line = network::render_record_line(rec);
  std::string_view weights_text;
  const network::RecordPrefix prefix = network::parse_record_prefix(line, &weights_text);
  CHECK(prefix.id == rec.id);
  CHECK(bits(prefix.state.v) == bits(rec.state.v));
  CHECK(weights_text == network::render_weights(rec.out_weights));
  // Re-rendering around the original weights reproduces the line exactly.
  CHECK(network::render_record_line(prefix, weights_text) == line);
}

TEST_CASE("field surgery only touches the addressed field") {
  const NeuronRecord rec = sample_record();
  const std::string line = network::render_record_line(rec);
  const std::string spliced = network::replace_field(line, 8, network::format_double(2.25));
  const NeuronRecord back = network::parse_record_line(spliced, 4);
  CHECK(back.sum == 2.25);
  NeuronRecord expect = rec;
  expect.sum = 2.25;
  CHECK(spliced == network::render_record_line(expect));
  CHECK_THROWS_AS(network::replace_field("a\tb", 5, "x"), ContractError);
}

TEST_CASE("malformed record lines are rejected with ParseError") {
  const std::string good = network::render_record_line(sample_record());
  CHECK_THROWS_AS(network::parse_record_line("1\t2\t3"), ParseError);          // field count
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 1, "X")),
                  ParseError);                                                 // bad kind
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 6, "inf")),
                  ParseError);                                                 // non-finite v
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 0, "-2")),
                  ParseError);                                                 // negative id
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 2, "0")),
                  ParseError);                                                 // a must be > 0
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 9, "x7")),
                  ParseError);                                                 // junk iter
}

TEST_CASE("cross-field violations are rejected with IntegrityError") {
  const std::string good = network::render_record_line(sample_record());
  // Wrong weight count for the declared population size.
  CHECK_THROWS_AS(network::parse_record_line(good, 9), IntegrityError);
  // Excitatory record with a negative weight.
  CHECK_THROWS_AS(network::parse_record_line(network::replace_field(good, 10, "0.1,-0.5,0,0"), 4),
                  IntegrityError);
}

TEST_CASE("snapshot text round trip") {
  const PopulationSpec spec{5, 3, 9001};
  Snapshot snap = network::initial_snapshot(spec);
  snap.header.iter = 0;
  const std::string text = network::render_snapshot(snap);
  const Snapshot back = network::parse_snapshot(text);
  CHECK(back.header.n == 8);
  CHECK(back.header.n_exc == 5);
  CHECK(back.header.n_inh == 3);
  CHECK(back.header.seed == 9001);
  REQUIRE(back.records.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(back.records[i].id == static_cast<std::int64_t>(i));
    CHECK(bits(back.records[i].state.u) == bits(snap.records[i].state.u));
    for (std::size_t m = 0; m < 8; ++m) {
      CHECK(bits(back.records[i].out_weights[m]) == bits(snap.records[i].out_weights[m]));
    }
  }
  // Render is stable through a parse cycle.
  CHECK(network::render_snapshot(back) == text);
  // A missing final newline is tolerated.
  std::string trimmed = text;
  trimmed.pop_back();
  CHECK(network::render_snapshot(network::parse_snapshot(trimmed)) == text);
}

TEST_CASE("snapshot validation catches structural damage") {
  const PopulationSpec spec{3, 2, 7};
  const Snapshot snap = network::initial_snapshot(spec);
  const std::string text = network::render_snapshot(snap);

  SUBCASE("bad magic") {
    std::string broken = text;
    broken[0] = 'X';
    CHECK_THROWS_AS(network::parse_snapshot(broken), ParseError);
  }
  SUBCASE("truncated record list") {
    std::string broken = text;
    broken.pop_back();                     // trailing newline
    broken.erase(broken.rfind('\n') + 1);  // last record line
    CHECK_THROWS_AS(network::parse_snapshot(broken), IntegrityError);
  }
  SUBCASE("header counts disagree") {
    Snapshot bad = snap;
    bad.header.n_inh = 3;
    CHECK_THROWS_AS(network::parse_snapshot(network::render_snapshot(bad)), IntegrityError);
  }
  SUBCASE("record iter differs from header iter") {
    Snapshot bad = snap;
    bad.records[1].iter = 5;
    CHECK_THROWS_AS(network::parse_snapshot(network::render_snapshot(bad)), IntegrityError);
  }
  SUBCASE("ids out of order") {
    Snapshot bad = snap;
    std::swap(bad.records[0], bad.records[1]);
    CHECK_THROWS_AS(network::parse_snapshot(network::render_snapshot(bad)), IntegrityError);
  }
  SUBCASE("kind partition violated") {
    Snapshot bad = snap;
    bad.records[0].kind = Kind::Inhibitory;
    for (double& w : bad.records[0].out_weights) w = -w;
    CHECK_THROWS_AS(network::parse_snapshot(network::render_snapshot(bad)), IntegrityError);
  }
}

TEST_CASE("snapshot file IO round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "spikemr_net_test";
  fs::create_directories(dir);
  const fs::path path = dir / "snap.snap";

  const Snapshot snap = network::initial_snapshot(PopulationSpec{4, 2, 3});
  network::write_snapshot_file(path, snap);
  const Snapshot back = network::read_snapshot_file(path);
  CHECK(network::render_snapshot(back) == network::render_snapshot(snap));
  CHECK_THROWS_AS(network::read_snapshot_file(dir / "missing.snap"), NotFoundError);
  fs::remove_all(dir);
}

TEST_CASE("cached renderer matches the plain renderer across state changes") {
  Snapshot snap = network::initial_snapshot(PopulationSpec{4, 2, 11});
  network::SnapshotRenderer renderer;
  CHECK(renderer.render(snap) == network::render_snapshot(snap));
  // Mutate the evolving fields; weights stay fixed, as the cache requires.
  snap.header.iter = 1;
  for (auto& rec : snap.records) {
    rec.state.v += 0.5;
    rec.sum = 0.25;
    rec.iter = 1;
  }
  CHECK(renderer.render(snap) == network::render_snapshot(snap));
}

}  // TEST_SUITE
