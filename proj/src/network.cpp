#include "spikemr/network.hpp"

#include <charconv>
#include <cinttypes>
#include <fstream>
#include <sstream>
#include <system_error>

#include "spikemr/errors.hpp"
#include "spikemr/rng.hpp"

namespace spikemr::network {
namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

void append_int(std::string& out, std::int64_t value) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, ptr);
}

void append_uint(std::string& out, std::uint64_t value) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, ptr);
}

[[noreturn]] void bad_field(std::string_view what, std::string_view text) {
  std::string snippet(text.substr(0, 32));
  throw ParseError("bad " + std::string(what) + ": '" + snippet + "'");
}

double parse_double_field(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    bad_field(what, text);
  }
  return value;
}

std::int64_t parse_int_field(std::string_view text, std::string_view what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    bad_field(what, text);
  }
  return value;
}

std::uint64_t parse_uint_field(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    bad_field(what, text);
  }
  return value;
}

double finite_field(std::string_view text, std::string_view what) {
  double value = parse_double_field(text, what);
  if (!std::isfinite(value)) bad_field(what, text);
  return value;
}

RecordPrefix prefix_of(const NeuronRecord& record) {
  return RecordPrefix{record.id,    record.kind, record.params,
                      record.state, record.sum,  record.iter};
}

constexpr std::string_view kMagic = "mrsnap1";
constexpr int kRecordFields = 11;  // id kind a b c d v u sum iter weights

}  // namespace

neuron::Params excitatory_params(double r) {
  return neuron::Params{0.02, 0.2, -65.0 + 15.0 * r * r, 8.0 - 6.0 * r * r};
}

neuron::Params inhibitory_params(double r) {
  return neuron::Params{0.02 + 0.08 * r, 0.25 - 0.05 * r, -65.0, 2.0};
}

std::vector<double> build_weights(const PopulationSpec& spec, std::int64_t id) {
  const std::int64_t n = spec.total();
  const double scale = id < spec.n_exc ? 0.5 : -1.0;
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (std::int64_t m = 0; m < n; ++m) {
    const double draw = rng::uniform01({spec.seed, rng::Stream::Build,
                                        static_cast<std::uint64_t>(id), 0,
                                        static_cast<std::uint64_t>(m) + 1});
    weights[static_cast<std::size_t>(m)] = scale * draw;
  }
  return weights;
}

std::vector<NeuronRecord> build_population(const PopulationSpec& spec) {
  if (spec.n_exc < 0 || spec.n_inh < 0 || spec.total() < 1) {
    throw UsageError("population spec requires n_exc >= 0, n_inh >= 0 and at least one neuron");
  }
  const std::int64_t n = spec.total();
  std::vector<NeuronRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (std::int64_t id = 0; id < n; ++id) {
    const double r = rng::uniform01(
        {spec.seed, rng::Stream::Build, static_cast<std::uint64_t>(id), 0, 0});
    NeuronRecord rec;
    rec.id = id;
    rec.kind = id < spec.n_exc ? Kind::Excitatory : Kind::Inhibitory;
    rec.params = rec.kind == Kind::Excitatory ? excitatory_params(r) : inhibitory_params(r);
    rec.state.v = -65.0;
    rec.state.u = rec.params.b * rec.state.v;
    rec.sum = 0.0;
    rec.iter = 0;
    rec.out_weights = build_weights(spec, id);
    records.push_back(std::move(rec));
  }
  return records;
}

Snapshot initial_snapshot(const PopulationSpec& spec) {
  Snapshot snap;
  snap.header = SnapshotHeader{spec.total(), spec.n_exc, spec.n_inh, 0, spec.seed};
  snap.records = build_population(spec);
  return snap;
}

std::string format_double(double x) {
  std::string out;
  append_double(out, x);
  return out;
}

void append_double(std::string& out, double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, ptr);
}

double parse_double(std::string_view text) { return parse_double_field(text, "number"); }

std::int64_t parse_int(std::string_view text) { return parse_int_field(text, "integer"); }

std::uint64_t parse_uint(std::string_view text) {
  return parse_uint_field(text, "unsigned integer");
}

std::string render_weights(std::span<const double> weights) {
  std::string out;
  out.reserve(weights.size() * 20);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i != 0) out.push_back(',');
    append_double(out, weights[i]);
  }
  return out;
}

std::vector<double> parse_weights(std::string_view text, std::int64_t expect_n) {
  std::vector<double> out;
  if (expect_n >= 0) out.reserve(static_cast<std::size_t>(expect_n));
  if (!text.empty()) {
    std::size_t start = 0;
    while (true) {
      std::size_t pos = text.find(',', start);
      std::string_view field =
          pos == std::string_view::npos ? text.substr(start) : text.substr(start, pos - start);
      out.push_back(finite_field(field, "weight"));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  if (expect_n >= 0 && static_cast<std::int64_t>(out.size()) != expect_n) {
    throw IntegrityError("weight row has " + std::to_string(out.size()) +
                         " entries, expected " + std::to_string(expect_n));
  }
  return out;
}

std::string render_record_line(const RecordPrefix& prefix, std::string_view weights_text) {
  std::string out;
  out.reserve(weights_text.size() + 160);
  append_int(out, prefix.id);
  out.push_back('\t');
  out.append(kind_letter(prefix.kind));
  out.push_back('\t');
  append_double(out, prefix.params.a);
  out.push_back('\t');
  append_double(out, prefix.params.b);
  out.push_back('\t');
  append_double(out, prefix.params.c);
  out.push_back('\t');
  append_double(out, prefix.params.d);
  out.push_back('\t');
  append_double(out, prefix.state.v);
  out.push_back('\t');
  append_double(out, prefix.state.u);
  out.push_back('\t');
  append_double(out, prefix.sum);
  out.push_back('\t');
  append_int(out, prefix.iter);
  out.push_back('\t');
  out.append(weights_text);
  return out;
}

std::string render_record_line(const NeuronRecord& record) {
  return render_record_line(prefix_of(record), render_weights(record.out_weights));
}

RecordPrefix parse_record_prefix(std::string_view line, std::string_view* weights_text) {
  auto fields = split(line, '\t');
  if (fields.size() != kRecordFields) {
    throw ParseError("record line has " + std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(kRecordFields));
  }
  RecordPrefix prefix;
  prefix.id = parse_int_field(fields[0], "id");
  if (prefix.id < 0) bad_field("id", fields[0]);
  if (fields[1] == "E") {
    prefix.kind = Kind::Excitatory;
  } else if (fields[1] == "I") {
    prefix.kind = Kind::Inhibitory;
  } else {
    bad_field("kind", fields[1]);
  }
  prefix.params.a = finite_field(fields[2], "param a");
  prefix.params.b = finite_field(fields[3], "param b");
  prefix.params.c = finite_field(fields[4], "param c");
  prefix.params.d = finite_field(fields[5], "param d");
  if (prefix.params.a <= 0.0) bad_field("param a", fields[2]);
  if (prefix.params.b <= 0.0) bad_field("param b", fields[3]);
  if (prefix.params.c >= neuron::kFireThreshold) bad_field("param c", fields[4]);
  if (prefix.params.d < 0.0) bad_field("param d", fields[5]);
  prefix.state.v = finite_field(fields[6], "state v");
  prefix.state.u = finite_field(fields[7], "state u");
  prefix.sum = finite_field(fields[8], "sum");
  prefix.iter = parse_int_field(fields[9], "iter");
  if (prefix.iter < 0) bad_field("iter", fields[9]);
  if (weights_text != nullptr) *weights_text = fields[10];
  return prefix;
}

NeuronRecord parse_record_line(std::string_view line, std::int64_t expect_n) {
  std::string_view weights_text;
  RecordPrefix prefix = parse_record_prefix(line, &weights_text);
  NeuronRecord record;
  record.id = prefix.id;
  record.kind = prefix.kind;
  record.params = prefix.params;
  record.state = prefix.state;
  record.sum = prefix.sum;
  record.iter = prefix.iter;
  record.out_weights = parse_weights(weights_text, expect_n);
  for (double w : record.out_weights) {
    const bool ok = record.kind == Kind::Excitatory ? w >= 0.0 : w <= 0.0;
    if (!ok) {
      throw IntegrityError("weight sign inconsistent with record kind for id " +
                           std::to_string(record.id));
    }
  }
  return record;
}

std::string replace_field(std::string_view line, int field_index, std::string_view new_text) {
  std::size_t start = 0;
  for (int i = 0; i < field_index; ++i) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      throw ContractError("replace_field: line has fewer fields than requested index");
    }
    start = pos + 1;
  }
  std::size_t end = line.find('\t', start);
  if (end == std::string_view::npos) end = line.size();
  std::string out;
  out.reserve(line.size() - (end - start) + new_text.size());
  out.append(line.substr(0, start));
  out.append(new_text);
  out.append(line.substr(end));
  return out;
}

std::string render_header(const SnapshotHeader& header) {
  std::string out;
  out.append(kMagic);
  out.push_back('\t');
  append_int(out, header.n);
  out.push_back('\t');
  append_int(out, header.n_exc);
  out.push_back('\t');
  append_int(out, header.n_inh);
  out.push_back('\t');
  append_int(out, header.iter);
  out.push_back('\t');
  append_uint(out, header.seed);
  return out;
}

SnapshotHeader parse_header(std::string_view line) {
  auto fields = split(line, '\t');
  if (fields.size() != 6 || fields[0] != kMagic) {
    throw ParseError("bad snapshot header (expected '" + std::string(kMagic) + "' and 5 fields)");
  }
  SnapshotHeader header;
  header.n = parse_int_field(fields[1], "header n");
  header.n_exc = parse_int_field(fields[2], "header n_exc");
  header.n_inh = parse_int_field(fields[3], "header n_inh");
  header.iter = parse_int_field(fields[4], "header iter");
  header.seed = parse_uint_field(fields[5], "header seed");
  if (header.n_exc < 0 || header.n_inh < 0 || header.n != header.n_exc + header.n_inh ||
      header.n < 1 || header.iter < 0) {
    throw IntegrityError("snapshot header fields are inconsistent");
  }
  return header;
}

std::string render_snapshot(const Snapshot& snapshot) {
  std::size_t bytes = 64;
  for (const NeuronRecord& record : snapshot.records) {
    bytes += record.out_weights.size() * 20 + 192;
  }
  std::string out;
  out.reserve(bytes);
  out.append(render_header(snapshot.header));
  out.push_back('\n');
  for (const NeuronRecord& record : snapshot.records) {
    out.append(render_record_line(record));
    out.push_back('\n');
  }
  return out;
}

Snapshot parse_snapshot(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty snapshot");

  Snapshot snap;
  try {
    snap.header = parse_header(lines[0]);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), 1);
  }
  if (static_cast<std::int64_t>(lines.size()) - 1 != snap.header.n) {
    throw IntegrityError("snapshot has " + std::to_string(lines.size() - 1) +
                         " record lines, header says " + std::to_string(snap.header.n));
  }
  snap.records.reserve(static_cast<std::size_t>(snap.header.n));
  for (std::int64_t i = 0; i < snap.header.n; ++i) {
    NeuronRecord record;
    try {
      record = parse_record_line(lines[static_cast<std::size_t>(i) + 1], snap.header.n);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), i + 2);
    }
    if (record.id != i) {
      throw IntegrityError("record ids must be 0..N-1 in order; found " +
                           std::to_string(record.id) + " at position " + std::to_string(i));
    }
    const Kind expected = i < snap.header.n_exc ? Kind::Excitatory : Kind::Inhibitory;
    if (record.kind != expected) {
      throw IntegrityError("record kind does not match header partition at id " +
                           std::to_string(i));
    }
    if (record.iter != snap.header.iter) {
      throw IntegrityError("record iter " + std::to_string(record.iter) +
                           " does not match header iter " + std::to_string(snap.header.iter));
    }
    snap.records.push_back(std::move(record));
  }
  return snap;
}

void write_snapshot_file(const std::filesystem::path& path, const Snapshot& snapshot) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  const std::string text = render_snapshot(snapshot);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

Snapshot read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open snapshot: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof()) throw Error("read failed: " + path.string());
  return parse_snapshot(buffer.str());
}

std::string SnapshotRenderer::render(const Snapshot& snapshot) {
  return render(snapshot.header, snapshot.records);
}

std::string SnapshotRenderer::render(const SnapshotHeader& header,
                                     const std::vector<NeuronRecord>& records) {
  if (weights_text_.empty()) {
    weights_text_.reserve(records.size());
    for (const NeuronRecord& record : records) {
      weights_text_.push_back(render_weights(record.out_weights));
    }
  }
  if (weights_text_.size() != records.size()) {
    throw ContractError("SnapshotRenderer reused with a different population size");
  }
  std::size_t bytes = 64;
  for (const std::string& wt : weights_text_) bytes += wt.size() + 192;
  std::string out;
  out.reserve(bytes);
  out.append(render_header(header));
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.append(render_record_line(prefix_of(records[i]), weights_text_[i]));
    out.push_back('\n');
  }
  return out;
}

}  // namespace spikemr::network
