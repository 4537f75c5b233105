#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spikemr/neuron.hpp"

// Network state: neuron records, deterministic population construction,
// and the tab-separated snapshot text format.
//
// A record's weight vector is its OUTGOING row of the synaptic matrix:
// out_weights[m] is the charge delivered to neuron m when this cell fires.
// Weights are fixed at build time and never change afterwards; everything
// that moves between iterations lives in (v, u, sum, iter).
//
// Snapshot format (one file per iteration):
//   header:  mrsnap1 \t N \t n_exc \t n_inh \t iter \t seed
//   record:  id \t kind \t a \t b \t c \t d \t v \t u \t sum \t iter \t w0,w1,...
// kind is E or I; doubles are rendered as shortest round-trip decimals, so
// parse(render(x)) reproduces x bit for bit.

namespace spikemr::network {

enum class Kind : std::uint8_t {
  Excitatory,
  Inhibitory,
};

struct NeuronRecord {
  std::int64_t id = 0;
  Kind kind = Kind::Excitatory;
  neuron::Params params;
  neuron::State state;
  double sum = 0.0;                 // accumulated incoming charge for the next step
  std::int64_t iter = 0;            // completed 1 ms steps
  std::vector<double> out_weights;  // entry m: charge delivered to m on fire
};

// Everything in a record line except the weights, which are the bulky part
// and usually do not need decoding (they only matter when the cell fires).
struct RecordPrefix {
  std::int64_t id = 0;
  Kind kind = Kind::Excitatory;
  neuron::Params params;
  neuron::State state;
  double sum = 0.0;
  std::int64_t iter = 0;
};

struct PopulationSpec {
  std::int64_t n_exc = 0;
  std::int64_t n_inh = 0;
  std::uint64_t seed = 0;
  std::int64_t total() const noexcept { return n_exc + n_inh; }
};

struct SnapshotHeader {
  std::int64_t n = 0;
  std::int64_t n_exc = 0;
  std::int64_t n_inh = 0;
  std::int64_t iter = 0;
  std::uint64_t seed = 0;
};

struct Snapshot {
  SnapshotHeader header;
  std::vector<NeuronRecord> records;
};

// --- deterministic construction -------------------------------------------

// Heterogeneity parameter r is one Build-stream draw per neuron.
neuron::Params excitatory_params(double r);
neuron::Params inhibitory_params(double r);

// Outgoing weight row for neuron `id`: excitatory sources scatter
// 0.5 * U[0,1) to every target, inhibitory sources -1.0 * U[0,1).
std::vector<double> build_weights(const PopulationSpec& spec, std::int64_t id);

// Fresh population at iteration 0: ids 0..n_exc-1 excitatory, the rest
// inhibitory; v = -65, u = b * v, sum = 0. Throws UsageError on a spec
// with negative counts or an empty population.
std::vector<NeuronRecord> build_population(const PopulationSpec& spec);

Snapshot initial_snapshot(const PopulationSpec& spec);

// --- number and line codec -------------------------------------------------

// Shortest decimal form that parses back to the identical bits.
std::string format_double(double x);
void append_double(std::string& out, double x);

// Strict full-consumption parses; throw ParseError on any malformed text.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

std::string render_weights(std::span<const double> weights);
// `expect_n` < 0 skips the length check.
std::vector<double> parse_weights(std::string_view text, std::int64_t expect_n = -1);

std::string render_record_line(const RecordPrefix& prefix, std::string_view weights_text);
std::string render_record_line(const NeuronRecord& record);

// Decodes the ten prefix fields, leaving the weights untouched as text.
// Validates field-level invariants (finite state, a > 0, b > 0, c < 30,
// d >= 0, sum finite, non-negative id and iter).
RecordPrefix parse_record_prefix(std::string_view line, std::string_view* weights_text = nullptr);

// Full decode including weights; checks the weight count when expect_n >= 0
// and sign consistency with the record kind (excitatory rows non-negative,
// inhibitory rows non-positive).
NeuronRecord parse_record_line(std::string_view line, std::int64_t expect_n = -1);

// In-place field surgery on an encoded record line, used on hot paths where
// re-rendering the weights would dominate. Field indices are 0-based.
std::string replace_field(std::string_view line, int field_index, std::string_view new_text);

std::string render_header(const SnapshotHeader& header);
SnapshotHeader parse_header(std::string_view line);

std::string render_snapshot(const Snapshot& snapshot);
// Full validation: header consistency, exactly N records with ids 0..N-1 in
// order, kind partition matching n_exc/n_inh, record iter == header iter,
// weight rows of length N.
Snapshot parse_snapshot(std::string_view text);

void write_snapshot_file(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot read_snapshot_file(const std::filesystem::path& path);

// Renders snapshots for a population whose weights never change, caching
// each record's encoded weight row on first use. Callers must only feed it
// successive states of the same population (same N, same weights); the
// record prefix is re-rendered every time.
class SnapshotRenderer {
 public:
  std::string render(const Snapshot& snapshot);
  std::string render(const SnapshotHeader& header, const std::vector<NeuronRecord>& records);

 private:
  std::vector<std::string> weights_text_;
};

inline const char* kind_letter(Kind k) noexcept {
  return k == Kind::Excitatory ? "E" : "I";
}

}  // namespace spikemr::network
