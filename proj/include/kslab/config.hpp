#pragma once

#include <map>
#include <string>
#include <vector>

#include "kslab/dynamics.hpp"

namespace kslab {

// Flat dotted-key view of a config file.  A [section] header prefixes the
// keys below it with "section."; fully dotted keys work at top level.
// Values stay strings until a spec builder types and validates them.
using KeyMap = std::map<std::string, std::string>;

// Lines: blank, full-line comments (# or ;), [section], key = value.
KeyMap parse_config_text(const std::string &text);
KeyMap parse_config_file(const std::string &path);

// Command-line override "dotted.key=value" (last writer wins).
void apply_override(KeyMap &map, const std::string &assignment);

// Diagnostics computed after the replicas finish.  Names: dispersion,
// collapse, drift, qv, variance, moment, triples, residual, holder, diffuse.
struct DiagnosticsSelect {
    std::vector<std::string> select;
    double moment_gamma = 1.75;
    long long triple_budget = 2000;
    int residual_term = 1; // index into the shared test-function family
    double holder_exponent = 0.25;
    double diffuse_scale = 1e-3;
};

struct RunSpec {
    SimConfig cfg;
    DiagnosticsSelect diag;
    int parallelism = 0; // worker threads per cell, 0 = hardware default
};

// Grid over (theta, n) sharing one cell template.
struct SweepSpec {
    std::vector<double> thetas;
    std::vector<int> ns;
    KeyMap base; // template keys, sweep.* removed
};

bool has_sweep_grid(const KeyMap &map);

// Builds and validates a single-cell spec.  Rejects unknown keys, rejects
// sweep grids, resolves symbolic detector thresholds (ell = "n" or "n^4")
// against the cell population, and loads atom files when the atom list is
// not given inline.
RunSpec run_spec_from(const KeyMap &map);

SweepSpec sweep_spec_from(const KeyMap &map);
RunSpec cell_spec(const SweepSpec &sweep, double theta, int n);

// Full flat echo of a validated spec: every key the schema knows, with the
// values in effect (defaults included) and atom lists resolved, so a run
// directory describes itself without the original config file.
KeyMap echo_keymap(const RunSpec &spec);

} // namespace kslab
