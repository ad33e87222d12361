#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sensedelay/sensing_bound.hpp"
#include "sensedelay/simulator.hpp"

namespace sensedelay {

enum class Command { Analyze, Simulate, SweepQ0, SweepRate, SensingBound, RaSdt, Validate };

const char* to_string(Command c);
Command command_from_string(const std::string& name);

/// Explicit values, or `points` samples from `from` to `to`.
struct Grid {
  std::vector<double> values;
  double from = 0.0;
  double to = 0.0;
  int points = 0;
  bool log = true;

  bool explicit_values() const { return !values.empty(); }
  bool is_set() const { return explicit_values() || points > 0; }
  std::vector<double> resolve() const;
};

enum class RateAxis { AggregatePacket, AggregateBit };

struct ExperimentSpec {
  Command command = Command::Analyze;
  Scenario scenario;
  SolverOptions solver;
  SimConfig sim;
  bool with_simulation = false;  // sweeps: add simulated columns

  Grid q0_grid;  // sweep-q0; unset means `q0_points` log-spaced points inside the region
  int q0_points = 8;
  Grid rate_grid;  // sweep-rate, sensing-bound, ra-sdt
  RateAxis rate_axis = RateAxis::AggregatePacket;
  SensingSearchConfig sensing;
  std::vector<RaSdtVariant> variants;
  std::vector<BackoffPolicy> backoffs;  // ra-sdt; empty means the scenario's
};

/// Parses an experiment config (JSON text). Unknown keys and type errors
/// throw Error(Config) naming the offending field, e.g.
/// "scenario.backoff.cutoff: expected an integer >= 0".
ExperimentSpec parse_experiment(const std::string& json_text);

/// Parses a bare scenario object (the "scenario" member of a config).
Scenario parse_scenario(const std::string& json_text);

/// Fully resolved config; parse_experiment(to_json(spec)) reproduces spec.
std::string to_json(const ExperimentSpec& spec, int indent = 2);
std::string scenario_to_json(const Scenario& s, int indent = 2);

using Cell = std::variant<double, std::int64_t, bool, std::string, std::monostate>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // warnings and summaries, one line each
  int failures = 0;                // validate: failed checks

  std::string to_csv() const;
  std::string to_json(int indent = 2) const;
};

std::string tool_version();

/// Runs the experiment. Grid points are evaluated on up to `jobs` threads;
/// rows keep grid order. Simulation seeds are spec.sim.seed + row index.
Table run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// Manifest written next to every output: the resolved config plus tool
/// version and output descriptors. Loadable by parse_experiment.
std::string manifest_json(const ExperimentSpec& spec, const std::string& output_path,
                          const std::string& format);

/// Oracle-equivalence suite behind the `validate` command.
Table run_validation(int jobs = 1);

}  // namespace sensedelay
