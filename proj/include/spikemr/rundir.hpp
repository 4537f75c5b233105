#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spikemr/oracle.hpp"
#include "spikemr/simjob.hpp"

// Run-directory layout and the text files inside it.
//
//   manifest.json        how the run was launched
//   iter_<k>.snap        snapshot at iteration k
//   spikes.csv           iter,neuron_id per event, sorted by (iter, id)
//   trace_v_<id>.csv     iter,value per completed step for a traced cell
//   trace_u_<id>.csv
//   job_metrics.jsonl    one engine job report per round (engine mode only)
//   rate.csv, spectrum.csv, summary.json   written by analyze
//
// compare works on the deterministic artifacts: snapshots, the spike log
// and traces. manifest/metrics/analyze outputs carry run metadata and are
// not part of the byte-equality contract.

namespace spikemr::rundir {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::int64_t iter);

std::string render_spike_log(std::span<const simjob::SpikeEvent> spikes);
// Strict decode; enforces (iter, id) sort order.
std::vector<simjob::SpikeEvent> parse_spike_log(std::string_view text);

// `var` selects the sampled component: 'v' or 'u'.
std::string render_trace(std::span<const oracle::TraceSample> samples, char var);

// Comparable artifact names present in a directory, in canonical order:
// snapshots by iteration, then spikes.csv, then traces by (var, id).
std::vector<std::string> list_run_files(const std::filesystem::path& dir);

}  // namespace spikemr::rundir
