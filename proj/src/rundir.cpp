#include "spikemr/rundir.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spikemr/errors.hpp"
#include "spikemr/network.hpp"

namespace spikemr::rundir {
namespace {

// Canonical sort rank for comparable artifacts: snapshots first (by iter),
// then the spike log, then traces by (variable, id).
struct FileRank {
  int group = 0;
  std::int64_t a = 0;
  std::int64_t b = 0;
  auto operator<=>(const FileRank&) const = default;
};

bool parse_trailing_id(std::string_view name, std::string_view prefix, std::string_view suffix,
                       std::int64_t& id) {
  if (name.size() <= prefix.size() + suffix.size()) return false;
  if (!name.starts_with(prefix) || !name.ends_with(suffix)) return false;
  const std::string_view digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string_view::npos) {
    return false;
  }
  id = network::parse_int(digits);
  return true;
}

bool classify(std::string_view name, FileRank& rank) {
  std::int64_t id = 0;
  if (parse_trailing_id(name, "iter_", ".snap", id)) {
    rank = FileRank{0, id, 0};
    return true;
  }
  if (name == "spikes.csv") {
    rank = FileRank{1, 0, 0};
    return true;
  }
  if (parse_trailing_id(name, "trace_v_", ".csv", id)) {
    rank = FileRank{2, 0, id};
    return true;
  }
  if (parse_trailing_id(name, "trace_u_", ".csv", id)) {
    rank = FileRank{2, 1, id};
    return true;
  }
  return false;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error("read failed: " + path.string());
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::int64_t iter) {
  return dir / ("iter_" + std::to_string(iter) + ".snap");
}

std::string render_spike_log(std::span<const simjob::SpikeEvent> spikes) {
  std::string out;
  out.reserve(spikes.size() * 12);
  for (const simjob::SpikeEvent& spike : spikes) {
    out.append(std::to_string(spike.iter));
    out.push_back(',');
    out.append(std::to_string(spike.neuron_id));
    out.push_back('\n');
  }
  return out;
}

std::vector<simjob::SpikeEvent> parse_spike_log(std::string_view text) {
  std::vector<simjob::SpikeEvent> spikes;
  std::size_t start = 0;
  std::int64_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    ++line_no;
    if (!line.empty()) {
      const std::size_t comma = line.find(',');
      if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
        throw ParseError("spike log line must be 'iter,neuron_id'", line_no);
      }
      simjob::SpikeEvent spike;
      spike.iter = network::parse_int(line.substr(0, comma));
      spike.neuron_id = network::parse_int(line.substr(comma + 1));
      if (spike.iter < 0 || spike.neuron_id < 0) {
        throw ParseError("spike log entries must be non-negative", line_no);
      }
      if (!spikes.empty() && spike < spikes.back()) {
        throw IntegrityError("spike log is not sorted by (iter, neuron_id) at line " +
                             std::to_string(line_no));
      }
      spikes.push_back(spike);
    }
    start = end + 1;
  }
  return spikes;
}

std::string render_trace(std::span<const oracle::TraceSample> samples, char var) {
  if (var != 'v' && var != 'u') throw ContractError("trace variable must be 'v' or 'u'");
  std::string out;
  out.reserve(samples.size() * 24);
  for (const oracle::TraceSample& sample : samples) {
    out.append(std::to_string(sample.iter));
    out.push_back(',');
    network::append_double(out, var == 'v' ? sample.v : sample.u);
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> list_run_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw NotFoundError("not a directory: " + dir.string());
  }
  std::vector<std::pair<FileRank, std::string>> ranked;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    FileRank rank;
    if (classify(name, rank)) ranked.emplace_back(rank, name);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> names;
  names.reserve(ranked.size());
  for (auto& [rank, name] : ranked) names.push_back(std::move(name));
  return names;
}

}  // namespace spikemr::rundir
