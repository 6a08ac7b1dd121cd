#pragma once

// Experiment runner behind the CLI: configuration parsing and validation,
// deterministic seeding, replica fan-out, and one driver per subcommand.
// Every driver returns the summary report as JSON; artifact files (summary
// JSON, record/table CSV) are written by run_and_write.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynwalk/conductance_law.hpp"
#include "dynwalk/regeneration.hpp"

namespace dynwalk {

using OrderedJson = nlohmann::ordered_json;

// Compact law descriptions accepted on the command line:
//   point:V            two_point:A,B:P       uniform:LO,HI
//   discrete:V1,V2,..:P1,P2,..
// each optionally followed by @KAPPA (default: the largest support value).
ConductanceLaw parse_law_string(const std::string& text);
ConductanceLaw parse_law_json(const OrderedJson& spec);
OrderedJson law_echo(const ConductanceLaw& law);

struct ExperimentConfig {
  std::string experiment = "simulate";

  // walker / environment
  std::string kind = "nvbrw";
  double lambda = 1.0;
  double mu = 1.0;
  int d = 1;
  std::string geometry = "lattice";
  int M = 2;
  std::optional<ConductanceLaw> law;

  // budgets
  std::uint64_t cycles = 0;
  std::uint64_t samples = 0;
  std::uint64_t steps = 50;
  std::uint64_t paths = 1000;
  double horizon = 0.0;
  double time_point = 1.0;  // observation time for verify-style runs

  // sweep grids (empty = not swept)
  std::vector<double> lambda_grid;
  std::vector<double> mu_grid;

  // coupling-check
  std::string coupling = "monotone";
  double epsilon = 0.5;

  // bd-check
  double bd_alpha = 1.0;
  int bd_L = 1;
  double rw_p = 0.9;

  // execution & output
  std::uint64_t seed = 1;
  unsigned replicas = 2;
  std::string out;      // summary JSON path ("" = stdout)
  std::string records;  // per-record / per-sample CSV path (optional)
  std::string table;    // table CSV path (sweep, coupling tables; optional)
  std::string format = "json";

  WalkerKind walker_kind() const;
  WalkerParams walker_params() const;
  void validate() const;
};

// "lo:hi:step" (inclusive) or "v1,v2,v3".
std::vector<double> parse_grid(const std::string& text);

// Parses a JSON config file; unknown keys are an error naming the key.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_json(const OrderedJson& j, ExperimentConfig& cfg);

OrderedJson run_simulate(const ExperimentConfig& cfg);
OrderedJson run_sweep(const ExperimentConfig& cfg);
OrderedJson run_verify(const ExperimentConfig& cfg);
OrderedJson run_validate_closed_forms(const ExperimentConfig& cfg);
OrderedJson run_coupling_check(const ExperimentConfig& cfg);
OrderedJson run_bd_check(const ExperimentConfig& cfg);

// Dispatches on cfg.experiment, writes artifacts, returns the process exit
// code (nonzero when a verification-style run has a failing check).
int run_and_write(const ExperimentConfig& cfg);

inline constexpr const char* kVersionString = "dynwalk-0.1.0";

}  // namespace dynwalk
