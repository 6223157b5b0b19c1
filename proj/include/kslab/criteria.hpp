#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kslab/persist.hpp"

namespace kslab {

struct CriterionOutcome {
    std::string id;
    std::string status; // "pass" | "fail" | "not_applicable"
    std::string detail;
};

struct VerifyReport {
    std::vector<CriterionOutcome> outcomes;
    int evaluated = 0;
    int failed = 0;
};

// ---- evaluation cores ---------------------------------------------------
// Tolerances live here; callers supply the data.  The verify registry feeds
// them from stored runs, the acceptance gate from freshly generated ones.

// |slope - (n-1)(2-theta)| <= 10% of the target (theta != 2)
CriterionOutcome check_drift_slope(const std::vector<RPath> &paths, double theta, int n,
                                   const std::string &label);
// critical case: |slope| within 3 standard errors of zero
CriterionOutcome check_zero_drift(const std::vector<RPath> &paths, double theta, int n,
                                  const std::string &label);
// quadratic-variation ratio in [0.85, 1.15]
CriterionOutcome check_qv_rate(const std::vector<RPath> &paths, const std::string &label);
// k2 in {n-2, n-1} and reflection symmetry for every n in [5, 10000],
// exact integer arithmetic
CriterionOutcome check_dimension_combinatorics();
// random closed triples x 4 nonincreasing profile pairs:
// delta >= lower_bound >= 0 within 1e-9 relative slack, zero violations
CriterionOutcome check_barycentre_inequality(long long triples, std::uint64_t seed);

struct MomentCell {
    int n = 0;
    double full = 0.0; // integral to the horizon
    double half = 0.0; // integral to half the horizon
};
// uniformly bounded across the population grid (max/min <= 1.5) and at most
// linear in time (full/half <= 2.5)
CriterionOutcome check_moment_bound(const std::vector<MomentCell> &cells, double gamma);
// supercritical collapse fraction >= 99%, subcritical <= 1%; a zero total
// skips that half
CriterionOutcome check_phase_split(int super_hits, int super_total, int sub_hits,
                                   int sub_total);
// medians strictly increasing with adjacent one-sided rank tests below 0.05
CriterionOutcome check_explosion_divergence(const std::vector<ExplosionGroup> &groups,
                                            const std::string &label);

struct ResidualSample {
    int n = 0;
    double rms = 0.0;
};
// RMS residual drops to at most 0.6x when the population rises 4x, and a
// constant test function gives an exactly zero residual
CriterionOutcome check_residual_scaling(const ResidualSample &lo, const ResidualSample &hi,
                                        bool constant_zero);
// reference-process dichotomy: hitting fraction <= 2% at dimension 3 and
// >= 50% at dimension 1 (z0=1, T=5, dt=1e-4)
CriterionOutcome check_bessel_dichotomy(int replicas, std::uint64_t seed);
// centroid mean-square displacement equals 2T/n within 10%
CriterionOutcome check_centroid(const std::vector<double> &sq_displacements, double horizon,
                                int n);
// replica 0 re-simulated from the echoed config matches the stored record
CriterionOutcome check_determinism_resim(const LoadedRun &run);

// exact-zero residual of a constant test function on one record
bool constant_residual_is_zero(const TrajectoryRecord &record);
// per-replica RMS of the weak-form residual at the final snapshot, using a
// fixed family term
double residual_rms_final(const std::vector<TrajectoryRecord> &records);

// ---- registry over stored runs ------------------------------------------

// The run itself, or the completed cells of a sweep; throws
// std::runtime_error when the root holds neither.
std::vector<std::string> collect_run_dirs(const std::string &root);

VerifyReport evaluate_criteria(const std::vector<LoadedRun> &runs);

// integrity (checksums) + every registered criterion over the runs under root
VerifyReport verify_root(const std::string &root);

int cmd_verify(const std::string &root, std::ostream &out, std::ostream &err);

} // namespace kslab
