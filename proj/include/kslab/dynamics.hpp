#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kslab/geometry.hpp"
#include "kslab/initializers.hpp"
#include "kslab/rng.hpp"
#include "kslab/vec2.hpp"

namespace kslab {

// Interacting particle system
//   dX^i = dB^i + (theta/N) sum_j K(X^i - X^j) dt,   K(x) = -x/|x|^2
// integrated with a tamed Euler scheme whose step size adapts to the
// minimal pairwise distance. The kernel is never regularized.

struct ParticleState {
    double t = 0.0;
    std::vector<Vec2> positions;
    bool alive = true;
};

struct StepPolicy {
    double dt_max = 0.01;
    double proximity_exponent = 2.0; // dt <= gain * dmin^exponent
    double taming_cap = 0.25;        // drift displacement cap, fraction of nn distance
    double substep_floor = 1e-14;    // 1e-12 * default dt_max
};
void validate(const StepPolicy &policy);

// Calibration constant c0 in dt <= c0 * dmin^p. The mean dispersion drift is
// step-size exact for this scheme, so an aggressive gain costs nothing in the
// dispersion budget; 1 keeps sub-collision steps at the diffusive scale.
//
// The step also shrinks dt until every drift displacement sits inside
// taming_cap * nn_dist (the drift gate).  Rescaling oversized displacements
// would weaken the attraction exactly where the diffusion/attraction balance
// is decided and suppress critical collapse; displacement taming therefore
// only fires on floor-clamped steps, as an emergency brake.
inline constexpr double kProximityGain = 1.0;

// Fires when some size-k cluster K has dispersion R_K <= 1/ell.
struct CollapseDetector {
    int k = 3;
    double ell = 1e6;
};

enum class EventKind { ClusterCollapse, TamingActivated, SubstepFloorHit };
const char *to_string(EventKind kind);

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::ClusterCollapse;
    int k = 0;                // detector identity (ClusterCollapse only)
    double ell = 0.0;         //
    std::vector<int> cluster; // collapsing cluster, or the tamed particles
    double value = 0.0;       // R_K at detection / tamed count / dmin^2
};

struct SubstepFloorError : std::runtime_error {
    double dmin2;
    explicit SubstepFloorError(double d2);
};

struct SimConfig {
    double theta = 1.0;
    int n = 5;
    double horizon = 1.0;
    StepPolicy policy;
    std::vector<CollapseDetector> detectors;
    InitialLaw law;
    int replicas = 1;
    std::uint64_t master_seed = 1;
    std::string output_dir = "runs";
    double snapshot_interval = 0.1;
};

// Minimal admissible population for a given theta: subcritical runs need
// n >= 1 + ceil(2/(2-theta)), and nothing runs below 5 particles.
int min_population(double theta);

void validate(const SimConfig &cfg);
void validate_detectors(const std::vector<CollapseDetector> &detectors, int n, double theta);

struct DriftInfo {
    std::vector<Vec2> drift;       // (theta/N) sum_j K(x_i - x_j)
    std::vector<double> nn_dist2;  // squared distance to nearest other particle
    double dmin2 = std::numeric_limits<double>::infinity();
    int closest_i = -1, closest_j = -1;
};

std::vector<Vec2> total_drift(const std::vector<Vec2> &positions, double theta);
DriftInfo drift_info(const std::vector<Vec2> &positions, double theta);

enum class FloorMode {
    Raise,       // throw SubstepFloorError (callers must run collapse detectors)
    ClampAndLog, // clamp dt to the floor and log a SubstepFloorHit event
};

inline constexpr double kNoCap = std::numeric_limits<double>::infinity();

// One tamed adaptive Euler step. Noise convention: for each particle in index
// order, one standard normal for x then one for y. Returns the applied dt.
double step(ParticleState &state, const StepPolicy &policy, double theta,
            NormalSource &noise, std::vector<Event> &events,
            FloorMode mode = FloorMode::Raise, double dt_cap = kNoCap);

struct Snapshot {
    double t = 0.0;
    std::vector<Vec2> positions;
};

struct RunStats {
    long long steps = 0;
    long long taming_steps = 0;
    long long floor_hits = 0;
    double min_dt = std::numeric_limits<double>::infinity();
    double initial_sixth_moment = 0.0;
};

struct TrajectoryRecord {
    double theta = 0.0;
    int n = 0;
    double horizon = 0.0;
    double snapshot_interval = 0.0;
    std::uint64_t seed = 0;
    std::vector<Snapshot> snapshots; // regular grid + horizon; frozen past collapse
    std::vector<Event> events;
    RunStats stats;
    bool collapsed = false;
    double collapse_time = -1.0;
    std::vector<int> collapse_cluster;
};

using Observer = std::function<void(const ParticleState &)>;

// Runs one replica. Stops early when the finest-ell k=3 detector fires; the
// remaining snapshot grid is then filled with the frozen final positions.
TrajectoryRecord simulate(const SimConfig &cfg, const InitialLaw &law,
                          const std::vector<CollapseDetector> &detectors,
                          std::uint64_t seed,
                          const std::vector<Observer> &observers = {});

// Earliest logged collapse of a size-k cluster at threshold 1/ell.
std::optional<double> first_collapse_time(const TrajectoryRecord &record, int k, double ell);

} // namespace kslab
