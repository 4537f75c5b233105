#include "spikemr/simjob.hpp"

#include <algorithm>
#include <cmath>

#include "spikemr/errors.hpp"
#include "spikemr/rng.hpp"

namespace spikemr::simjob {
namespace {

std::int64_t charge_source(std::string_view payload) {
  const std::size_t pos = payload.rfind('\t');
  if (pos == std::string_view::npos) throw ParseError("charge payload has no source field");
  return network::parse_int(payload.substr(pos + 1));
}

std::int64_t record_id(std::string_view payload) {
  const std::size_t pos = payload.find('\t');
  return network::parse_int(payload.substr(0, pos == std::string_view::npos ? payload.size() : pos));
}

// The wire-level mapper. Weights are decoded only when the cell fires; the
// advanced record is re-rendered around the untouched weights text, which
// keeps the per-record cost independent of N for silent cells.
void map_record_line(const engine::KeyValue& input, engine::Emitter& out, std::uint64_t seed,
                     std::int64_t iter) {
  if (input.tag != kTagRecord) {
    throw IntegrityError("map input for key " + std::to_string(input.key) + " is not a record");
  }
  std::string_view weights_text;
  network::RecordPrefix prefix = network::parse_record_prefix(input.payload, &weights_text);
  if (prefix.id != input.key) {
    throw IntegrityError("record id " + std::to_string(prefix.id) + " does not match its key " +
                         std::to_string(input.key));
  }
  if (prefix.iter != iter) {
    throw IntegrityError("record iter " + std::to_string(prefix.iter) +
                         " does not match round iter " + std::to_string(iter));
  }

  const double thalamic =
      thalamic_scale(prefix.kind) *
      rng::uniform01({seed, rng::Stream::Thalamic, static_cast<std::uint64_t>(prefix.id),
                      static_cast<std::uint64_t>(iter), 0});
  const double current = thalamic + prefix.sum;
  neuron::State next =
      neuron::step(prefix.state, prefix.params, {current}, prefix.id, iter);
  prefix.sum = 0.0;
  prefix.iter = iter + 1;

  if (neuron::fired(next)) {
    const std::vector<double> weights = network::parse_weights(weights_text);
    for (std::size_t m = 0; m < weights.size(); ++m) {
      if (weights[m] != 0.0) {
        out.emit(static_cast<std::int64_t>(m), kTagCharge,
                 render_charge(Charge{weights[m], prefix.id}));
      }
    }
    out.side(iter, prefix.id);
    next = neuron::reset(next, prefix.params);
  }
  prefix.state = next;
  if (std::fabs(prefix.state.v) > 1000.0) {
    throw DivergedError(prefix.id, iter, prefix.state.v, prefix.state.u);
  }
  out.emit(prefix.id, kTagRecord, network::render_record_line(prefix, weights_text));
}

// Wire-level combiner: records pass through, local charges fold into one
// partial sum per target, added in ascending source-id order.
std::vector<engine::KeyValue> combine_group(std::int64_t key,
                                            std::vector<engine::KeyValue>&& values) {
  std::vector<engine::KeyValue> out;
  out.reserve(values.size());
  std::vector<Charge> charges;
  for (engine::KeyValue& kv : values) {
    if (kv.tag == kTagRecord) {
      out.push_back(std::move(kv));
    } else {
      charges.push_back(parse_charge(kv.payload));
    }
  }
  if (!charges.empty()) {
    std::stable_sort(charges.begin(), charges.end(),
                     [](const Charge& x, const Charge& y) { return x.source < y.source; });
    double total = 0.0;
    for (const Charge& c : charges) total += c.amount;
    out.push_back(engine::KeyValue{key, kTagCharge, render_charge(Charge{total, -1})});
  }
  return out;
}

// Wire-level reducer: exactly one record, charges already in canonical
// order. The sum lands in the encoded line by field surgery so the weights
// text is never touched.
engine::KeyValue reduce_group(std::int64_t key, std::vector<engine::KeyValue>&& values) {
  const engine::KeyValue* record = nullptr;
  int record_count = 0;
  double total = 0.0;
  for (const engine::KeyValue& kv : values) {
    if (kv.tag == kTagRecord) {
      ++record_count;
      record = &kv;
    } else {
      total += parse_charge(kv.payload).amount;
    }
  }
  if (record_count != 1) {
    throw IntegrityError("reduce group for key " + std::to_string(key) + " holds " +
                         std::to_string(record_count) + " records, expected exactly 1");
  }
  if (record_id(record->payload) != key) {
    throw IntegrityError("record id does not match reduce key " + std::to_string(key));
  }
  std::string line = network::replace_field(record->payload, 8, network::format_double(total));
  return engine::KeyValue{key, kTagRecord, std::move(line)};
}

std::pair<int, std::int64_t> canonical_key(const engine::KeyValue& kv) {
  if (kv.tag == kTagRecord) return {0, 0};
  return {1, charge_source(kv.payload)};
}

// The same order the engine applies via JobSpec::canonical_key; used by the
// value-level reducer, which has no engine in front of it.
void sort_canonical(std::vector<engine::KeyValue>& values) {
  std::stable_sort(values.begin(), values.end(),
                   [](const engine::KeyValue& x, const engine::KeyValue& y) {
                     return canonical_key(x) < canonical_key(y);
                   });
}

class VectorEmitter final : public engine::Emitter {
 public:
  void emit(std::int64_t key, std::uint8_t tag, std::string payload) override {
    emissions.push_back(engine::KeyValue{key, tag, std::move(payload)});
  }
  void side(std::int64_t a, std::int64_t b) override { sides.push_back(engine::SideEvent{a, b}); }

  std::vector<engine::KeyValue> emissions;
  std::vector<engine::SideEvent> sides;
};

MessageValue decode_value(const engine::KeyValue& kv) {
  if (kv.tag == kTagRecord) return network::parse_record_line(kv.payload);
  if (kv.tag == kTagCharge) return parse_charge(kv.payload);
  throw ParseError("unknown message tag " + std::to_string(kv.tag));
}

engine::KeyValue encode_value(std::int64_t key, const MessageValue& value) {
  if (const auto* record = std::get_if<network::NeuronRecord>(&value)) {
    return engine::KeyValue{key, kTagRecord, network::render_record_line(*record)};
  }
  return engine::KeyValue{key, kTagCharge, render_charge(std::get<Charge>(value))};
}

}  // namespace

std::string render_charge(const Charge& charge) {
  std::string out;
  out.reserve(28);
  network::append_double(out, charge.amount);
  out.push_back('\t');
  out.append(std::to_string(charge.source));
  return out;
}

Charge parse_charge(std::string_view text) {
  const std::size_t pos = text.find('\t');
  if (pos == std::string_view::npos || text.find('\t', pos + 1) != std::string_view::npos) {
    throw ParseError("charge payload must have exactly two fields");
  }
  Charge charge;
  charge.amount = network::parse_double(text.substr(0, pos));
  if (!std::isfinite(charge.amount)) throw ParseError("charge amount must be finite");
  charge.source = network::parse_int(text.substr(pos + 1));
  if (charge.source < -1) throw ParseError("charge source must be a neuron id or -1");
  return charge;
}

double thalamic_scale(network::Kind kind) noexcept {
  return kind == network::Kind::Excitatory ? 5.0 : 2.0;
}

MapResult map_neuron(const network::NeuronRecord& record, std::uint64_t seed, std::int64_t iter) {
  const engine::KeyValue input{record.id, kTagRecord, network::render_record_line(record)};
  VectorEmitter emitter;
  map_record_line(input, emitter, seed, iter);
  MapResult result;
  result.fired = !emitter.sides.empty();
  result.emissions.reserve(emitter.emissions.size());
  for (const engine::KeyValue& kv : emitter.emissions) {
    result.emissions.push_back(Emission{kv.key, decode_value(kv)});
  }
  return result;
}

std::vector<MessageValue> combine_charges(std::int64_t key, std::vector<MessageValue> values) {
  std::vector<engine::KeyValue> wire;
  wire.reserve(values.size());
  for (const MessageValue& value : values) wire.push_back(encode_value(key, value));
  std::vector<engine::KeyValue> folded = combine_group(key, std::move(wire));
  std::vector<MessageValue> out;
  out.reserve(folded.size());
  for (const engine::KeyValue& kv : folded) out.push_back(decode_value(kv));
  return out;
}

network::NeuronRecord reduce_neuron(std::int64_t key, std::vector<MessageValue> values) {
  std::vector<engine::KeyValue> wire;
  wire.reserve(values.size());
  for (const MessageValue& value : values) wire.push_back(encode_value(key, value));
  sort_canonical(wire);
  engine::KeyValue folded = reduce_group(key, std::move(wire));
  return network::parse_record_line(folded.payload);
}

engine::JobSpec make_job(std::int64_t iter, const RoundConfig& config) {
  engine::JobSpec spec;
  const std::uint64_t seed = config.seed;
  spec.mapper = [seed, iter](const engine::KeyValue& input, engine::Emitter& out) {
    map_record_line(input, out, seed, iter);
  };
  if (config.combiner) {
    spec.combiner = [](std::int64_t key, std::vector<engine::KeyValue>&& values) {
      return combine_group(key, std::move(values));
    };
  }
  spec.reducer = [](std::int64_t key, std::vector<engine::KeyValue>&& values) {
    std::vector<engine::KeyValue> out;
    out.push_back(reduce_group(key, std::move(values)));
    return out;
  };
  spec.canonical_key = [](const engine::KeyValue& kv) { return canonical_key(kv); };
  spec.num_map_tasks = config.num_map_tasks;
  spec.num_reduce_tasks = config.num_reduce_tasks;
  spec.faults = config.faults;
  spec.job_id = iter;
  return spec;
}

RoundResult run_round(const engine::Engine& engine, const std::vector<engine::KeyValue>& inputs,
                      std::int64_t iter, const RoundConfig& config) {
  engine::JobResult job = engine.run_job(inputs, make_job(iter, config));
  if (job.outputs.size() != inputs.size()) {
    throw IntegrityError("round " + std::to_string(iter) + " produced " +
                         std::to_string(job.outputs.size()) + " records from " +
                         std::to_string(inputs.size()) + " inputs");
  }
  RoundResult result;
  result.outputs = std::move(job.outputs);
  result.spikes.reserve(job.side_events.size());
  for (const engine::SideEvent& event : job.side_events) {
    if (event.a != iter) {
      throw IntegrityError("spike event iteration " + std::to_string(event.a) +
                           " does not match round iter " + std::to_string(iter));
    }
    result.spikes.push_back(SpikeEvent{event.a, event.b});
  }
  std::sort(result.spikes.begin(), result.spikes.end());
  result.report = std::move(job.report);
  return result;
}

std::vector<engine::KeyValue> records_to_inputs(const std::vector<network::NeuronRecord>& records) {
  std::vector<engine::KeyValue> inputs;
  inputs.reserve(records.size());
  for (const network::NeuronRecord& record : records) {
    inputs.push_back(engine::KeyValue{record.id, kTagRecord, network::render_record_line(record)});
  }
  return inputs;
}

std::vector<network::NeuronRecord> outputs_to_records(const std::vector<engine::KeyValue>& outputs,
                                                      std::int64_t expect_n) {
  std::vector<network::NeuronRecord> records;
  records.reserve(outputs.size());
  for (const engine::KeyValue& kv : outputs) {
    if (kv.tag != kTagRecord) throw IntegrityError("round output is not a record");
    records.push_back(network::parse_record_line(kv.payload, expect_n));
  }
  return records;
}

std::string snapshot_bytes(network::SnapshotHeader header, std::int64_t iter,
                           const std::vector<engine::KeyValue>& outputs) {
  if (static_cast<std::int64_t>(outputs.size()) != header.n) {
    throw IntegrityError("snapshot body would hold " + std::to_string(outputs.size()) +
                         " records, header says " + std::to_string(header.n));
  }
  header.iter = iter;
  std::size_t bytes = 64;
  for (const engine::KeyValue& kv : outputs) bytes += kv.payload.size() + 1;
  std::string out;
  out.reserve(bytes);
  out.append(network::render_header(header));
  out.push_back('\n');
  for (const engine::KeyValue& kv : outputs) {
    out.append(kv.payload);
    out.push_back('\n');
  }
  return out;
}

SnapshotInputs inputs_from_snapshot_text(std::string_view text) {
  SnapshotInputs result;
  std::size_t line_end = text.find('\n');
  if (line_end == std::string_view::npos) throw ParseError("snapshot has no record lines", 1);
  result.header = network::parse_header(text.substr(0, line_end));
  result.inputs.reserve(static_cast<std::size_t>(result.header.n));
  std::size_t start = line_end + 1;
  std::int64_t index = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty()) {
      const std::int64_t id = record_id(line);
      if (id != index) {
        throw IntegrityError("record ids must be 0..N-1 in order; found " + std::to_string(id) +
                             " at position " + std::to_string(index));
      }
      result.inputs.push_back(engine::KeyValue{id, kTagRecord, std::string(line)});
      ++index;
    }
    start = end + 1;
  }
  if (index != result.header.n) {
    throw IntegrityError("snapshot has " + std::to_string(index) + " record lines, header says " +
                         std::to_string(result.header.n));
  }
  return result;
}

}  // namespace spikemr::simjob
