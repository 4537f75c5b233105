#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spikemr {

// Base class for every failure the library reports. Catching this at the
// CLI boundary is what maps library errors to process exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text input. `line` is 1-based when known, -1 otherwise.
struct ParseError : Error {
  explicit ParseError(const std::string& what, std::int64_t line_no = -1)
      : Error(line_no >= 0 ? what + " (line " + std::to_string(line_no) + ")" : what),
        line(line_no) {}
  std::int64_t line;
};

// Structurally valid input that violates a cross-field or cross-record
// requirement (wrong record count, duplicate id, missing record in a
// reduce group, stale iteration counter, ...).
struct IntegrityError : Error {
  using Error::Error;
};

// Numerical blow-up of the membrane dynamics.
struct DivergedError : Error {
  DivergedError(std::int64_t neuron, std::int64_t iteration, double v, double u)
      : Error("simulation diverged at neuron " + std::to_string(neuron) +
              ", iteration " + std::to_string(iteration) + ": v=" +
              std::to_string(v) + " u=" + std::to_string(u)),
        neuron_id(neuron),
        iter(iteration) {}
  std::int64_t neuron_id;
  std::int64_t iter;
};

// A MapReduce task raised an error or ran out of retry attempts; carries
// enough context to identify the offending task.
struct JobError : Error {
  JobError(const std::string& what, std::int64_t job, const std::string& task_desc)
      : Error(what + " [job " + std::to_string(job) + ", " + task_desc + "]"),
        job_id(job),
        task(task_desc) {}
  std::int64_t job_id;
  std::string task;
};

// API misuse: a documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// A requested entity (trace id, run file) does not exist.
struct NotFoundError : Error {
  using Error::Error;
};

// Bad command line: unknown flag, out-of-range value, invalid combination.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace spikemr
