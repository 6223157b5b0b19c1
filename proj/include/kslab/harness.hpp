#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kslab/bessel.hpp"
#include "kslab/empirical_measure.hpp"
#include "kslab/persist.hpp"

namespace kslab {

// Seed for replica i of cell c under the given master seed; distinct
// (cell, replica) pairs get independent streams.
std::uint64_t replica_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replica);

// All replicas of one cell.  Worker threads pull replica indices from a
// shared counter and write into their own slots, so the output does not
// depend on the parallelism degree or on scheduling.
std::vector<TrajectoryRecord> simulate_replicas(const RunSpec &spec, std::uint64_t cell_index);

// Shared C2-normalized test-function family; built once, content-hash
// recorded with every run.
const TestFunctionFamily &shared_family();

DiagnosticsReport run_diagnostics(const RunSpec &spec,
                                  const std::vector<TrajectoryRecord> &records);

// KSLAB_OUTPUT_ROOT relocates relative output paths; absolute paths win.
std::string resolve_output_dir(const std::string &dir);

// Subcommand bodies.  Exit codes: 0 success, 1 validation, 2 runtime
// failure, 3 verification failure.
int cmd_run(const std::string &config_path, const std::vector<std::string> &overrides,
            std::ostream &out, std::ostream &err);
int cmd_sweep(const std::string &config_path, const std::vector<std::string> &overrides,
              std::ostream &out, std::ostream &err);
int cmd_bessel(const BesselConfig &cfg, int replicas, std::uint64_t seed,
               const std::string &csv_path, std::ostream &out, std::ostream &err);
int cmd_table(double theta, int n, std::ostream &out, std::ostream &err);

} // namespace kslab
