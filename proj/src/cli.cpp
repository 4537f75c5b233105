#include "spikemr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"

#include "spikemr/analysis.hpp"
#include "spikemr/engine.hpp"
#include "spikemr/errors.hpp"
#include "spikemr/network.hpp"
#include "spikemr/oracle.hpp"
#include "spikemr/rundir.hpp"
#include "spikemr/simjob.hpp"

namespace spikemr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct RunOptions {
  std::string mode = "engine";
  std::int64_t n_exc = 800;
  std::int64_t n_inh = 200;
  std::int64_t ms = 500;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string resume_path;
  int partitions = 1;
  int reduce_tasks = 1;
  bool combiner = false;
  double kill_probability = 0.0;
  int max_retries = 1;
  std::uint64_t fault_seed = 0;
  int threads = 1;
  bool in_memory = false;
  std::vector<std::int64_t> traced;
};

struct AnalyzeOptions {
  std::string run_dir;
  double band_lo = 1.0;
  double band_hi = 30.0;
};

// --- run -----------------------------------------------------------------

void write_manifest(const fs::path& dir, const RunOptions& options, std::int64_t start_iter) {
  ordered_json manifest;
  manifest["mode"] = options.mode;
  manifest["n_exc"] = options.n_exc;
  manifest["n_inh"] = options.n_inh;
  manifest["ms"] = options.ms;
  manifest["seed"] = options.seed;
  manifest["start_iter"] = start_iter;
  manifest["partitions"] = options.partitions;
  manifest["reduce_tasks"] = options.reduce_tasks;
  manifest["combiner"] = options.combiner;
  manifest["kill_probability"] = options.kill_probability;
  manifest["max_retries"] = options.max_retries;
  manifest["fault_seed"] = options.fault_seed;
  manifest["threads"] = options.threads;
  manifest["in_memory"] = options.in_memory;
  manifest["traced"] = options.traced;
  if (options.resume_path.empty()) {
    manifest["resumed_from"] = nullptr;
  } else {
    manifest["resumed_from"] = options.resume_path;
  }
  rundir::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ordered_json task_json(const engine::TaskOutcome& task) {
  ordered_json j;
  j["phase"] = task.phase == engine::Phase::Map ? "map" : "reduce";
  j["task_id"] = task.task_id;
  j["attempts"] = task.attempts;
  j["injected_kills"] = task.injected_kills;
  j["records_in"] = task.records_in;
  j["records_out"] = task.records_out;
  return j;
}

ordered_json report_json(const engine::JobReport& report) {
  ordered_json j;
  j["job_id"] = report.job_id;
  j["input_records"] = report.input_records;
  j["map_emissions"] = report.map_emissions;
  j["shuffled_pairs"] = report.shuffled_pairs;
  j["shuffled_bytes"] = report.shuffled_bytes;
  j["output_records"] = report.output_records;
  j["side_events"] = report.side_events;
  j["injected_kills"] = report.injected_kills;
  j["wall_ms"] = report.wall_ms;
  j["tasks"] = ordered_json::array();
  for (const engine::TaskOutcome& task : report.tasks) j["tasks"].push_back(task_json(task));
  return j;
}

struct TraceSeries {
  std::vector<oracle::TraceSample> samples;
};

void write_traces(const fs::path& dir, const std::map<std::int64_t, TraceSeries>& traces) {
  for (const auto& [id, series] : traces) {
    rundir::write_file(dir / ("trace_v_" + std::to_string(id) + ".csv"),
                       rundir::render_trace(series.samples, 'v'));
    rundir::write_file(dir / ("trace_u_" + std::to_string(id) + ".csv"),
                       rundir::render_trace(series.samples, 'u'));
  }
}

void run_engine_mode(const RunOptions& options, const fs::path& dir,
                     const network::SnapshotHeader& header, std::vector<engine::KeyValue> inputs,
                     std::ostream& out) {
  const std::int64_t start_iter = header.iter;
  engine::Engine engine(options.threads);
  simjob::RoundConfig config;
  config.seed = header.seed;
  config.num_map_tasks = options.partitions;
  config.num_reduce_tasks = options.reduce_tasks;
  config.combiner = options.combiner;
  config.faults.kill_probability = options.kill_probability;
  config.faults.max_retries = options.max_retries;
  config.faults.fault_seed = options.fault_seed;

  std::map<std::int64_t, TraceSeries> traces;
  for (std::int64_t id : options.traced) traces.try_emplace(id);

  std::vector<simjob::SpikeEvent> spikes;
  std::string metrics;
  for (std::int64_t round = 0; round < options.ms; ++round) {
    const std::int64_t iter = start_iter + round;
    simjob::RoundResult result = simjob::run_round(engine, inputs, iter, config);
    spikes.insert(spikes.end(), result.spikes.begin(), result.spikes.end());
    metrics += report_json(result.report).dump() + "\n";

    for (auto& [id, series] : traces) {
      const engine::KeyValue& kv = result.outputs[static_cast<std::size_t>(id)];
      const network::RecordPrefix prefix = network::parse_record_prefix(kv.payload);
      if (prefix.id != id) {
        throw IntegrityError("round outputs are not densely keyed by id at " + std::to_string(id));
      }
      series.samples.push_back(oracle::TraceSample{iter + 1, prefix.state.v, prefix.state.u});
    }

    const bool keep = !options.in_memory || round == options.ms - 1;
    if (keep) {
      const std::string bytes = simjob::snapshot_bytes(header, iter + 1, result.outputs);
      rundir::write_file(rundir::snapshot_path(dir, iter + 1), bytes);
      // Chain through storage: the next round consumes what a restart
      // from this snapshot would read back.
      inputs =
          simjob::inputs_from_snapshot_text(rundir::read_file(rundir::snapshot_path(dir, iter + 1)))
              .inputs;
    } else {
      inputs = std::move(result.outputs);
    }
  }

  rundir::write_file(dir / "spikes.csv", rundir::render_spike_log(spikes));
  rundir::write_file(dir / "job_metrics.jsonl", metrics);
  write_traces(dir, traces);
  out << "run complete: mode=engine dir=" << dir.string() << " iters=[" << start_iter << ","
      << start_iter + options.ms << ") spikes=" << spikes.size() << "\n";
}

void run_oracle_mode(const RunOptions& options, const fs::path& dir, oracle::Simulator sim,
                     std::ostream& out) {
  const std::int64_t start_iter = sim.iter();
  sim.set_traced(options.traced);
  for (std::int64_t round = 0; round < options.ms; ++round) {
    sim.step_ms();
    if (!options.in_memory || round == options.ms - 1) {
      rundir::write_file(rundir::snapshot_path(dir, sim.iter()), sim.snapshot_text());
    }
  }
  rundir::write_file(dir / "spikes.csv", rundir::render_spike_log(sim.spikes()));
  std::map<std::int64_t, TraceSeries> traces;
  for (std::int64_t id : options.traced) traces[id] = TraceSeries{sim.trace(id)};
  write_traces(dir, traces);
  out << "run complete: mode=oracle dir=" << dir.string() << " iters=[" << start_iter << ","
      << start_iter + options.ms << ") spikes=" << sim.spikes().size() << "\n";
}

void cmd_run(RunOptions options, std::ostream& out) {
  if (options.ms < 0) throw UsageError("--ms must be non-negative");
  if (options.kill_probability < 0.0 || options.kill_probability > 0.9) {
    throw UsageError("--kill-prob must lie in [0, 0.9]");
  }
  if (options.max_retries < 1) throw UsageError("--max-retries must be at least 1");
  if (options.partitions < 1 || options.reduce_tasks < 1) {
    throw UsageError("--partitions and --reduce-tasks must be at least 1");
  }
  if (options.threads < 1) throw UsageError("--threads must be at least 1");

  const fs::path dir(options.out_dir);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw UsageError("output path exists and is not a directory: " + dir.string());
    }
    if (!fs::is_empty(dir)) {
      throw UsageError("output directory exists and is not empty: " + dir.string());
    }
  }
  fs::create_directories(dir);

  network::Snapshot start;
  if (!options.resume_path.empty()) {
    start = network::read_snapshot_file(options.resume_path);
    options.n_exc = start.header.n_exc;
    options.n_inh = start.header.n_inh;
    options.seed = start.header.seed;
  } else {
    start = network::initial_snapshot(
        network::PopulationSpec{options.n_exc, options.n_inh, options.seed});
  }
  for (std::int64_t id : options.traced) {
    if (id < 0 || id >= start.header.n) {
      throw UsageError("--trace id " + std::to_string(id) + " is outside the population");
    }
  }

  write_manifest(dir, options, start.header.iter);
  rundir::write_file(rundir::snapshot_path(dir, start.header.iter),
                     network::render_snapshot(start));

  if (options.mode == "engine") {
    const network::SnapshotHeader header = start.header;
    std::vector<engine::KeyValue> inputs = simjob::records_to_inputs(start.records);
    start.records.clear();
    run_engine_mode(options, dir, header, std::move(inputs), out);
  } else {
    run_oracle_mode(options, dir, oracle::Simulator(std::move(start)), out);
  }
}

// --- compare ---------------------------------------------------------------

// Field separator for first-difference reporting, by artifact kind.
char separator_for(std::string_view name) {
  return name.ends_with(".snap") ? '\t' : ',';
}

struct Location {
  std::int64_t line = 0;
  std::int64_t field = 0;
  std::string left;
  std::string right;
};

std::vector<std::string_view> split_all(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string clip(std::string_view text) {
  constexpr std::size_t kMax = 48;
  if (text.size() <= kMax) return std::string(text);
  return std::string(text.substr(0, kMax)) + "...";
}

Location locate_difference(std::string_view left, std::string_view right, char sep) {
  const auto left_lines = split_all(left, '\n');
  const auto right_lines = split_all(right, '\n');
  const std::size_t lines = std::min(left_lines.size(), right_lines.size());
  for (std::size_t i = 0; i < lines; ++i) {
    if (left_lines[i] == right_lines[i]) continue;
    const auto lf = split_all(left_lines[i], sep);
    const auto rf = split_all(right_lines[i], sep);
    const std::size_t fields = std::min(lf.size(), rf.size());
    for (std::size_t f = 0; f < fields; ++f) {
      if (lf[f] != rf[f]) {
        return Location{static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(f + 1),
                        clip(lf[f]), clip(rf[f])};
      }
    }
    return Location{static_cast<std::int64_t>(i + 1),
                    static_cast<std::int64_t>(std::min(lf.size(), rf.size()) + 1),
                    "<" + std::to_string(lf.size()) + " fields>",
                    "<" + std::to_string(rf.size()) + " fields>"};
  }
  return Location{static_cast<std::int64_t>(lines + 1), 0,
                  "<" + std::to_string(left_lines.size()) + " lines>",
                  "<" + std::to_string(right_lines.size()) + " lines>"};
}

void require_complete(const fs::path& dir, const std::vector<std::string>& files) {
  bool has_snapshot = false;
  bool has_spikes = false;
  for (const std::string& name : files) {
    if (name.ends_with(".snap")) has_snapshot = true;
    if (name == "spikes.csv") has_spikes = true;
  }
  if (!has_snapshot || !has_spikes) {
    throw IntegrityError("run directory is incomplete (needs snapshots and spikes.csv): " +
                         dir.string());
  }
}

int cmd_compare(const fs::path& dir_a, const fs::path& dir_b, std::ostream& out) {
  const std::vector<std::string> files_a = rundir::list_run_files(dir_a);
  const std::vector<std::string> files_b = rundir::list_run_files(dir_b);
  require_complete(dir_a, files_a);
  require_complete(dir_b, files_b);

  if (files_a != files_b) {
    out << "directories differ: artifact sets do not match\n";
    for (const std::string& name : files_a) {
      if (std::find(files_b.begin(), files_b.end(), name) == files_b.end()) {
        out << "  only in " << dir_a.string() << ": " << name << "\n";
      }
    }
    for (const std::string& name : files_b) {
      if (std::find(files_a.begin(), files_a.end(), name) == files_a.end()) {
        out << "  only in " << dir_b.string() << ": " << name << "\n";
      }
    }
    return kExitMismatch;
  }

  for (const std::string& name : files_a) {
    const std::string left = rundir::read_file(dir_a / name);
    const std::string right = rundir::read_file(dir_b / name);
    if (left == right) continue;
    const Location loc = locate_difference(left, right, separator_for(name));
    out << "directories differ: " << name << " line " << loc.line;
    if (loc.field > 0) out << " field " << loc.field;
    out << ": '" << loc.left << "' != '" << loc.right << "'\n";
    return kExitMismatch;
  }

  out << "directories match: " << files_a.size() << " artifacts bit-identical\n";
  return kExitOk;
}

// --- analyze ---------------------------------------------------------------

void cmd_analyze(const AnalyzeOptions& options, std::ostream& out) {
  if (!(options.band_lo > 0.0) || options.band_hi < options.band_lo) {
    throw UsageError("--band-lo/--band-hi must satisfy 0 < lo <= hi");
  }
  const fs::path dir(options.run_dir);
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(rundir::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad manifest.json: " + std::string(e.what()));
  }
  const std::int64_t n_exc = manifest.at("n_exc").get<std::int64_t>();
  const std::int64_t n_inh = manifest.at("n_inh").get<std::int64_t>();
  const std::int64_t ms = manifest.at("ms").get<std::int64_t>();
  const std::int64_t start_iter = manifest.value("start_iter", std::int64_t{0});
  const std::int64_t duration = start_iter + ms;
  const std::int64_t n = n_exc + n_inh;

  const std::vector<simjob::SpikeEvent> spikes =
      rundir::parse_spike_log(rundir::read_file(dir / "spikes.csv"));
  const analysis::Summary summary =
      analysis::summarize(spikes, duration, n, options.band_lo, options.band_hi);

  // The raster is the spike log re-emitted for plotting, written next to the
  // derived series so a plot can be made from analysis outputs alone.
  rundir::write_file(dir / "raster.csv", rundir::render_spike_log(spikes));

  const std::vector<std::int64_t> rate = analysis::bin_rate(spikes, duration);
  std::string rate_csv;
  rate_csv.reserve(rate.size() * 12);
  for (std::size_t t = 0; t < rate.size(); ++t) {
    rate_csv += std::to_string(t) + "," + std::to_string(rate[t]) + "\n";
  }
  rundir::write_file(dir / "rate.csv", rate_csv);

  const analysis::Spectrum spectrum = analysis::rate_spectrum(rate);
  std::string spectrum_csv;
  spectrum_csv.reserve(spectrum.freq_hz.size() * 24);
  for (std::size_t k = 0; k < spectrum.freq_hz.size(); ++k) {
    spectrum_csv += network::format_double(spectrum.freq_hz[k]) + "," +
                    network::format_double(spectrum.magnitude[k]) + "\n";
  }
  rundir::write_file(dir / "spectrum.csv", spectrum_csv);

  ordered_json summary_json;
  summary_json["num_neurons"] = n;
  summary_json["duration_ms"] = duration;
  summary_json["total_spikes"] = summary.total_spikes;
  summary_json["mean_rate_hz"] = summary.mean_rate_hz;
  summary_json["band_lo_hz"] = summary.band_lo_hz;
  summary_json["band_hi_hz"] = summary.band_hi_hz;
  if (summary.peak_hz) {
    summary_json["peak_hz"] = *summary.peak_hz;
  } else {
    summary_json["peak_hz"] = nullptr;
  }
  rundir::write_file(dir / "summary.json", summary_json.dump(2) + "\n");

  out << "analysis: spikes=" << summary.total_spikes << " mean_rate_hz=" << summary.mean_rate_hz
      << " peak_hz=";
  if (summary.peak_hz) {
    out << *summary.peak_hz;
  } else {
    out << "none";
  }
  out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic MapReduce runner for a spiking-network workload"};
  app.require_subcommand(1);

  RunOptions run_options;
  CLI::App* run_cmd = app.add_subcommand("run", "Simulate and write a run directory");
  run_cmd->add_option("--mode", run_options.mode, "Execution path: engine or oracle")
      ->check(CLI::IsMember({"engine", "oracle"}))
      ->capture_default_str();
  run_cmd->add_option("--exc", run_options.n_exc, "Excitatory cell count")->capture_default_str();
  run_cmd->add_option("--inh", run_options.n_inh, "Inhibitory cell count")->capture_default_str();
  run_cmd->add_option("--ms", run_options.ms, "Milliseconds (rounds) to simulate")
      ->capture_default_str();
  run_cmd->add_option("--seed", run_options.seed, "Master seed")->capture_default_str();
  run_cmd->add_option("--out", run_options.out_dir, "Run directory to create")->required();
  run_cmd->add_option("--resume", run_options.resume_path,
                      "Snapshot file to resume from (replaces --exc/--inh/--seed)");
  CLI::Option* partitions_opt =
      run_cmd->add_option("--partitions", run_options.partitions, "Map task count")
          ->capture_default_str();
  CLI::Option* reduce_opt =
      run_cmd->add_option("--reduce-tasks", run_options.reduce_tasks, "Reduce task count")
          ->capture_default_str();
  std::string combiner_str = "off";
  CLI::Option* combiner_opt =
      run_cmd->add_option("--combiner", combiner_str, "Fold charges map-side: on or off")
          ->check(CLI::IsMember({"on", "off"}))
          ->capture_default_str();
  CLI::Option* kill_opt = run_cmd->add_option("--kill-prob", run_options.kill_probability,
                                              "Injected kill probability per task attempt")
                              ->capture_default_str();
  CLI::Option* retries_opt =
      run_cmd->add_option("--max-retries", run_options.max_retries, "Attempts allowed per task")
          ->capture_default_str();
  CLI::Option* fault_seed_opt =
      run_cmd->add_option("--fault-seed", run_options.fault_seed, "Seed for injected kills")
          ->capture_default_str();
  CLI::Option* threads_opt =
      run_cmd->add_option("--threads", run_options.threads, "Worker threads")
          ->capture_default_str();
  run_cmd->add_flag("--in-memory", run_options.in_memory,
                    "Keep only the first and final snapshots on disk");
  run_cmd->add_option("--trace", run_options.traced, "Neuron ids to trace (comma list, repeatable)")
      ->delimiter(',');

  std::vector<std::string> compare_dirs;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Byte-compare two run directories");
  compare_cmd->add_option("dirs", compare_dirs, "Run directories")->expected(2)->required();

  AnalyzeOptions analyze_options;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Firing-rate and spectrum summary for a run directory");
  analyze_cmd->add_option("dir", analyze_options.run_dir, "Run directory")->required();
  analyze_cmd->add_option("--band-lo", analyze_options.band_lo, "Band lower edge, Hz")
      ->capture_default_str();
  analyze_cmd->add_option("--band-hi", analyze_options.band_hi, "Band upper edge, Hz")
      ->capture_default_str();

  try {
    // CLI11's vector overload consumes arguments back to front.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  run_options.combiner = combiner_str == "on";

  try {
    if (run_cmd->parsed()) {
      // Flags that only steer the MapReduce path are rejected in oracle mode
      // rather than silently ignored.
      if (run_options.mode == "oracle") {
        for (const CLI::Option* opt :
             {partitions_opt, reduce_opt, combiner_opt, kill_opt, retries_opt, fault_seed_opt,
              threads_opt}) {
          if (opt->count() > 0) {
            throw UsageError("flag " + opt->get_name() + " requires --mode engine");
          }
        }
      }
      if (!run_options.resume_path.empty()) {
        for (const std::string flag : {"--exc", "--inh", "--seed"}) {
          if (run_cmd->count(flag) > 0) {
            throw UsageError("flag " + flag + " conflicts with --resume");
          }
        }
      }
      cmd_run(run_options, out);
      return kExitOk;
    }
    if (compare_cmd->parsed()) {
      return cmd_compare(compare_dirs[0], compare_dirs[1], out);
    }
    cmd_analyze(analyze_options, out);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace spikemr::cli
