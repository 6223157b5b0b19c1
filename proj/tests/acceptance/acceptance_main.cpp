// Acceptance gate.  Twelve statements about the laboratory, each evaluated
// on freshly simulated data with the tolerances pinned in the shared
// evaluation cores (criteria.cpp) and the experiment sizes pinned here.
// Prints one PASS/FAIL line per criterion and exits nonzero on any FAIL.
//
// Everything is seeded, so reruns print identical lines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kslab/bessel.hpp"
#include "kslab/criteria.hpp"
#include "kslab/harness.hpp"

using namespace kslab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int idx, const std::string &name, const CriterionOutcome &o) {
    const bool ok = o.status == "pass";
    if (!ok) ++failures;
    std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

void info(int idx, const std::string &text) {
    std::printf("  .. %2d %s\n", idx, text.c_str());
    std::fflush(stdout);
}

InitialLaw two_atoms() {
    InitialLaw law;
    law.kind = LawKind::AtomPlusJitter;
    law.atoms = {{1.0, 0.5, 0.0}, {1.0, -0.5, 0.0}};
    law.jitter = 0.05;
    return law;
}

RunSpec make_cell(double theta, int n, double horizon, int replicas, std::uint64_t seed,
                  double snapshot_interval, double detector_ell, const InitialLaw &law) {
    RunSpec spec;
    spec.cfg.theta = theta;
    spec.cfg.n = n;
    spec.cfg.horizon = horizon;
    spec.cfg.replicas = replicas;
    spec.cfg.master_seed = seed;
    spec.cfg.snapshot_interval = snapshot_interval;
    spec.cfg.policy.dt_max = 1e-3;
    spec.cfg.detectors = {{3, detector_ell}};
    spec.cfg.law = law;
    validate(spec.cfg);
    return spec;
}

std::vector<RPath> r_paths(const std::vector<TrajectoryRecord> &records) {
    std::vector<RPath> paths;
    paths.reserve(records.size());
    for (const auto &rec : records) paths.push_back(r_path(rec));
    return paths;
}

// joint verdict over sub-checks that the criterion states as one sentence
CriterionOutcome join(const std::vector<CriterionOutcome> &parts) {
    CriterionOutcome out{parts.front().id, "pass", ""};
    for (const auto &p : parts) {
        if (p.status != "pass") out.status = "fail";
        if (!out.detail.empty()) out.detail += " | ";
        out.detail += p.detail;
    }
    return out;
}

ExplosionGroup explosion_group(const std::vector<TrajectoryRecord> &records, int n,
                               bool single_atom) {
    ExplosionGroup g;
    g.n = n;
    g.single_atom_law = single_atom;
    for (const auto &rec : records)
        g.taus.push_back(rec.collapsed ? std::optional<double>(rec.collapse_time)
                                       : std::nullopt);
    return g;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::map<std::string, std::string> dir_bytes(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) {
            std::ifstream in(entry.path(), std::ios::binary);
            std::ostringstream buf;
            buf << in.rdbuf();
            out[fs::relative(entry.path(), dir).string()] = buf.str();
        }
    return out;
}

// ---- criteria ------------------------------------------------------------

void criterion_1() {
    std::vector<CriterionOutcome> parts;
    std::uint64_t seed = 10100;
    for (double theta : {0.5, 1.0, 1.5})
        for (int n : {11, 21}) {
            auto spec = make_cell(theta, n, 1.0, 300, seed++, 0.1, 1e6, two_atoms());
            const auto records = simulate_replicas(spec, 0);
            parts.push_back(check_drift_slope(r_paths(records), theta, n,
                                              "theta=" + fmt(theta) + ",n=" + std::to_string(n)));
        }
    report(1, "dispersion drift slope", join(parts));
}

void criterion_2() {
    auto spec = make_cell(2.0, 21, 1.0, 300, 10200, 0.1, 1e6, two_atoms());
    const auto records = simulate_replicas(spec, 0);
    report(2, "critical zero drift", check_zero_drift(r_paths(records), 2.0, 21, "theta=2,n=21"));
}

void criterion_3() {
    auto spec = make_cell(1.0, 20, 1.0, 100, 10300, 0.1, 1e6, InitialLaw{});
    const auto records = simulate_replicas(spec, 0);
    auto simulated = check_qv_rate(r_paths(records), "particle R-paths (theta=1,n=20)");

    // synthetic reference input at the matching dimension (n-1)(2-theta) = 19
    BesselConfig bcfg;
    bcfg.dimension = 19.0;
    bcfg.z0 = 5.0;
    bcfg.horizon = 1.0;
    bcfg.dt = 1e-3;
    std::vector<RPath> synth(100);
    for (int r = 0; r < 100; ++r) {
        auto &p = synth[r];
        p.r = simulate_bessel(bcfg, derive_seed(10310, r));
        p.t.resize(p.r.size());
        for (std::size_t k = 0; k < p.t.size(); ++k)
            p.t[k] = std::min(k * bcfg.dt, bcfg.horizon);
        p.stop_time = bcfg.horizon;
        p.collapsed = false;
    }
    auto reference = check_qv_rate(synth, "synthetic dimension 19");
    report(3, "quadratic variation rate", join({simulated, reference}));
}

void criterion_4() { report(4, "dimension combinatorics", check_dimension_combinatorics()); }

void criterion_5() { report(5, "barycentre inequality", check_barycentre_inequality(100000, 10500)); }

void criterion_6() {
    std::vector<MomentCell> cells;
    std::uint64_t seed = 10600;
    for (int n : {16, 32, 64}) {
        auto spec = make_cell(1.5, n, 2.0, 200, seed++, 0.05, 1e6, InitialLaw{});
        const auto records = simulate_replicas(spec, 0);
        MomentCell cell;
        cell.n = n;
        cell.full = pair_moment_integral(records, 1.75, 2.0).value;
        cell.half = pair_moment_integral(records, 1.75, 1.0).value;
        cells.push_back(cell);
    }
    report(6, "pair moment bound", check_moment_bound(cells, 1.75));
}

void criterion_7() {
    auto super_spec = make_cell(3.0, 10, 20.0, 200, 10700, 0.5, 1e6, InitialLaw{});
    const auto super_records = simulate_replicas(super_spec, 0);
    int super_hits = 0;
    for (const auto &rec : super_records) super_hits += rec.collapsed ? 1 : 0;

    auto sub_spec = make_cell(1.0, 50, 5.0, 200, 10710, 0.5, 1e6, InitialLaw{});
    const auto sub_records = simulate_replicas(sub_spec, 0);
    int sub_hits = 0;
    for (const auto &rec : sub_records) sub_hits += rec.collapsed ? 1 : 0;

    report(7, "phase classification", check_phase_split(super_hits, 200, sub_hits, 200));
}

void criterion_8() {
    // As stated: detector threshold 1/ell with ell = n.  That threshold sits
    // far above the initial within-atom triple dispersion (about 4*jitter^2,
    // with the minimum over O(n^3) triples lower still), so every replica
    // trips the detector in the initial sweep at t=0 and all medians are 0.
    const int ns[3] = {8, 32, 128};
    const double horizons[3] = {4.0, 16.0, 48.0};
    std::vector<ExplosionGroup> stated;
    std::uint64_t seed = 10800;
    for (int i = 0; i < 3; ++i) {
        auto spec = make_cell(2.0, ns[i], horizons[i], 100, seed++, horizons[i] / 8,
                              static_cast<double>(ns[i]), two_atoms());
        stated.push_back(explosion_group(simulate_replicas(spec, 0), ns[i], false));
    }
    report(8, "critical explosion time divergence (threshold 1/n)",
           check_explosion_divergence(stated, "ell=n"));

    // Same experiment with the threshold deepened to 1/n^4, beyond the reach
    // of initial-condition fluctuations: the divergence becomes visible.  The
    // top population drops to 64 because the adaptive stepper's cost scales
    // roughly like n^4 per unit time in the pre-collapse phase; 64 keeps a
    // usable replica count inside the time budget.
    std::vector<ExplosionGroup> corrected;
    const int deep_ns[3] = {8, 32, 64};
    const double deep_horizons[3] = {4.0, 16.0, 16.0};
    const int reps[3] = {100, 100, 50};
    for (int i = 0; i < 3; ++i) {
        auto spec = make_cell(2.0, deep_ns[i], deep_horizons[i], reps[i], seed++,
                              deep_horizons[i] / 8,
                              std::pow(static_cast<double>(deep_ns[i]), 4.0), two_atoms());
        corrected.push_back(explosion_group(simulate_replicas(spec, 0), deep_ns[i], false));
    }
    const auto deep = check_explosion_divergence(corrected, "ell=n^4");
    info(8, "threshold 1/n^4 variant (" + deep.status + "): " + deep.detail);
}

void criterion_9() {
    auto lo_spec = make_cell(1.0, 32, 1.0, 128, 10900, 0.05, 1e6, InitialLaw{});
    const auto lo_records = simulate_replicas(lo_spec, 0);
    auto hi_spec = make_cell(1.0, 128, 1.0, 128, 10910, 0.05, 1e6, InitialLaw{});
    const auto hi_records = simulate_replicas(hi_spec, 0);
    const ResidualSample lo{32, residual_rms_final(lo_records)};
    const ResidualSample hi{128, residual_rms_final(hi_records)};
    report(9, "weak solution residual scaling",
           check_residual_scaling(lo, hi, constant_residual_is_zero(lo_records.front())));
}

void criterion_10() { report(10, "squared Bessel hitting dichotomy", check_bessel_dichotomy(500, 11000)); }

void criterion_11() {
    auto spec = make_cell(1.5, 64, 1.0, 500, 11100, 0.5, 1e6, InitialLaw{});
    const auto records = simulate_replicas(spec, 0);
    std::vector<double> sq;
    for (const auto &rec : records) {
        const auto &first = rec.snapshots.front().positions;
        const auto &last = rec.snapshots.back().positions;
        Vec2 s0{0, 0}, s1{0, 0};
        for (int i = 0; i < spec.cfg.n; ++i) {
            s0 += first[i];
            s1 += last[i];
        }
        s0 *= 1.0 / spec.cfg.n;
        s1 *= 1.0 / spec.cfg.n;
        sq.push_back((s1 - s0).norm2());
    }
    report(11, "centroid conservation", check_centroid(sq, 1.0, 64));
}

void criterion_12() {
    const fs::path root = fs::temp_directory_path() / "kslab_acceptance_det";
    fs::remove_all(root);
    auto spec = make_cell(2.0, 8, 1.0, 6, 11200, 0.1, 1e4, two_atoms());
    spec.cfg.output_dir = (root / "run").string();
    spec.parallelism = 2;

    const auto records = simulate_replicas(spec, 0);
    write_run_dir(spec.cfg.output_dir, spec, shared_family().content_hash, records,
                  run_diagnostics(spec, records));
    const auto first = dir_bytes(root / "run");

    const auto again = simulate_replicas(spec, 0);
    write_run_dir(spec.cfg.output_dir, spec, shared_family().content_hash, again,
                  run_diagnostics(spec, again));
    const bool identical = dir_bytes(root / "run") == first;

    CriterionOutcome o{"determinism", identical ? "pass" : "fail",
                       identical ? "re-run reproduced every artifact byte "
                                   "(6 replicas, 2 worker threads)"
                                 : "artifact bytes changed between identical runs"};
    fs::remove_all(root);
    report(12, "bitwise determinism", o);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
