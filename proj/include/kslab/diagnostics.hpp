#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kslab/dynamics.hpp"

namespace kslab {

struct Series {
    std::vector<double> t;
    std::vector<double> v;
};

struct DriftEstimate {
    double slope = 0.0;
    double std_error = 0.0;
    long long n_samples = 0;
};

struct MomentIntegral {
    double gamma = 0.0;
    double value = 0.0;
    double horizon = 0.0;
};

// d(k) = (k-1)(2 - k*theta/n) for k in [2, n]; the critical cluster size k2
// (smallest k >= 3 with d(k) < 2) is populated only at theta == 2, where it
// can be evaluated in exact integer arithmetic.
struct DimensionTable {
    double theta = 0.0;
    int n = 0;
    std::vector<double> d; // index k-2 holds d(k)
    int k2 = -1;

    double at(int k) const { return d.at(static_cast<std::size_t>(k - 2)); }
};

DimensionTable dimension_table(double theta, int n);

// One replica's dispersion path, stopped at collapse.
struct RPath {
    std::vector<double> t;
    std::vector<double> r;
    double stop_time = 0.0; // collapse time, or the horizon when none
    bool collapsed = false;
};

Series global_dispersion_path(const TrajectoryRecord &record);
RPath r_path(const TrajectoryRecord &record);

// Ratio estimator of the dispersion drift: mean of R_stop - R_0 over mean of
// stop times. Optional stopping makes this unbiased for the drift constant
// even on collapsing paths.
DriftEstimate bessel_drift_test(const std::vector<RPath> &paths, double theta, int n);

// Ratio of squared compensated increments to 4*R*dt; increments past a
// collapse, and the final 10% of any collapsed path, are excluded.
DriftEstimate bessel_qv_test(const std::vector<RPath> &paths);

// Replica-averaged trapezoid quadrature of the all-pairs mean of
// |x_i - x_j|^(gamma-2), truncated at collapse.
MomentIntegral pair_moment_integral(const std::vector<TrajectoryRecord> &records, double gamma,
                                    double horizon);

// Dispersion drift per particle: V = R/n, slope contract (1-1/n)(2-theta).
DriftEstimate variance_drift_test(const std::vector<TrajectoryRecord> &records);

struct GMonitor {
    Series avg;                    // per-snapshot triple average (inf saturates)
    std::vector<long long> exceedances; // per-snapshot count of infinite triples
    long long triples_per_snapshot = 0;
};

// Per-snapshot average of the three-point functional over index triples: full
// enumeration when n <= 32, otherwise triple_budget uniformly seeded samples.
GMonitor g_functional_monitor(const TrajectoryRecord &record, long long triple_budget,
                              std::uint64_t seed);

// All-pairs mean of f(squared distance) per snapshot; exposes the bounded
// pair functionals as path monitors.
Series pair_functional_monitor(const TrajectoryRecord &record,
                               const std::function<double(double)> &f);

struct ExplosionGroup {
    int n = 0;
    std::vector<std::optional<double>> taus; // per replica; empty optional = censored
    bool single_atom_law = false;
};

struct ExplosionRow {
    int n = 0;
    int replicas = 0;
    int collapsed = 0;
    double median = 0.0; // +inf when fewer than half collapsed
    double iqr = 0.0;
    bool hypothesis_violating = false;
};

struct ExplosionSummary {
    std::vector<ExplosionRow> rows;
    // one-sided rank-test p-values for consecutive groups: small p supports
    // "later group explodes later"
    std::vector<double> p_adjacent;
    bool medians_nondecreasing = false;
};

// One-sided Mann-Whitney p-value for the alternative "b tends larger than a";
// ties (including censored +inf values) get midranks with a tie-corrected
// normal approximation.
double mann_whitney_one_sided(const std::vector<double> &a, const std::vector<double> &b);

ExplosionSummary explosion_time_summary(const std::vector<ExplosionGroup> &groups);

struct NamedEstimate {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    long long n = 0;
    std::string window;
};

struct NamedSeries {
    std::string name;
    Series series;
};

struct DiagnosticsReport {
    std::vector<NamedEstimate> estimates;
    std::vector<NamedSeries> series;
};

} // namespace kslab
