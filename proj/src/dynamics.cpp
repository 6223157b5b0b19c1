#include "kslab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier compensated accumulator
struct Comp {
    double s = 0.0, c = 0.0;
    void add(double v) {
        const double t = s + v;
        c += (std::fabs(s) >= std::fabs(v)) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    double get() const { return s + c; }
};

} // namespace

const char *to_string(EventKind kind) {
    switch (kind) {
    case EventKind::ClusterCollapse: return "cluster_collapse";
    case EventKind::TamingActivated: return "taming_activated";
    case EventKind::SubstepFloorHit: return "substep_floor_hit";
    }
    return "unknown";
}

SubstepFloorError::SubstepFloorError(double d2)
    : std::runtime_error("step: adaptive dt fell below substep_floor (near-collapse)"),
      dmin2(d2) {}

void validate(const StepPolicy &policy) {
    if (!(policy.substep_floor > 0.0) || !(policy.dt_max > policy.substep_floor))
        throw std::invalid_argument("step policy: need dt_max > substep_floor > 0");
    if (!(policy.taming_cap > 0.0) || !(policy.taming_cap < 1.0))
        throw std::invalid_argument("step policy: taming_cap must lie in (0,1)");
    if (!(policy.proximity_exponent > 0.0))
        throw std::invalid_argument("step policy: proximity_exponent must be > 0");
}

int min_population(double theta) {
    int floor5 = 5;
    if (theta < 2.0) {
        const int sub = 1 + static_cast<int>(std::ceil(2.0 / (2.0 - theta)));
        return std::max(floor5, sub);
    }
    return floor5;
}

void validate_detectors(const std::vector<CollapseDetector> &detectors, int n, double theta) {
    bool have_k3 = false;
    for (const auto &d : detectors) {
        if (d.k < 2 || d.k > n)
            throw std::invalid_argument("detector: cluster size k must lie in [2, n]");
        if (!(d.ell >= 1.0))
            throw std::invalid_argument("detector: threshold index ell must be >= 1");
        if (d.k == 3) have_k3 = true;
    }
    if (theta >= 2.0 && !have_k3)
        throw std::invalid_argument(
            "detectors: runs with theta >= 2 require a k=3 detector (blow-up guard)");
}

namespace {

void validate_scalars(const SimConfig &cfg) {
    if (!(cfg.theta > 0.0)) throw std::invalid_argument("config: theta must be > 0");
    if (cfg.n < 5) throw std::invalid_argument("config: need n >= 5");
    if (cfg.theta < 2.0 && cfg.n < min_population(cfg.theta))
        throw std::invalid_argument(
            "config: n below the subcritical floor 1+ceil(2/(2-theta)) = " +
            std::to_string(min_population(cfg.theta)));
    if (!(cfg.horizon >= 0.0)) throw std::invalid_argument("config: horizon must be >= 0");
    if (!(cfg.snapshot_interval > 0.0))
        throw std::invalid_argument("config: snapshot_interval must be > 0");
    if (cfg.replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
    validate(cfg.policy);
}

} // namespace

void validate(const SimConfig &cfg) {
    validate_scalars(cfg);
    validate_detectors(cfg.detectors, cfg.n, cfg.theta);
}

DriftInfo drift_info(const std::vector<Vec2> &positions, double theta) {
    const int n = static_cast<int>(positions.size());
    DriftInfo out;
    out.nn_dist2.assign(n, kInf);
    std::vector<Comp> ax(n), ay(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Vec2 d = positions[i] - positions[j];
            const double n2 = d.norm2();
            if (n2 < out.nn_dist2[i]) out.nn_dist2[i] = n2;
            if (n2 < out.nn_dist2[j]) out.nn_dist2[j] = n2;
            if (n2 < out.dmin2) {
                out.dmin2 = n2;
                out.closest_i = i;
                out.closest_j = j;
            }
            const Vec2 f = pair_kernel(d); // force on i; reaction on j is -f
            ax[i].add(f.x);
            ay[i].add(f.y);
            ax[j].add(-f.x);
            ay[j].add(-f.y);
        }
    }
    out.drift.resize(n);
    const double scale = theta / static_cast<double>(n);
    for (int i = 0; i < n; ++i)
        out.drift[i] = {scale * ax[i].get(), scale * ay[i].get()};
    return out;
}

std::vector<Vec2> total_drift(const std::vector<Vec2> &positions, double theta) {
    return drift_info(positions, theta).drift;
}

namespace {

double do_step(ParticleState &state, const DriftInfo &info, const StepPolicy &policy,
               NormalSource &noise, std::vector<Event> &events, FloorMode mode,
               double dt_cap, RunStats *stats) {
    const int n = static_cast<int>(state.positions.size());
    double dt = std::min(policy.dt_max, dt_cap);
    if (info.dmin2 < kInf) {
        const double prox =
            kProximityGain * std::pow(std::sqrt(info.dmin2), policy.proximity_exponent);
        if (prox < dt) dt = prox;
    }
    // drift-proportional gate: shrink dt until every untamed displacement sits
    // strictly inside its taming cap.  Rescaling displacements instead would
    // weaken the attraction exactly where the critical balance is decided, and
    // block absorption at theta = 2; with the gate, taming only ever fires on
    // floor-clamped steps.
    for (int i = 0; i < n; ++i) {
        const double b = info.drift[i].norm();
        if (b > 0.0 && info.nn_dist2[i] < kInf) {
            const double gate =
                (1.0 - 1e-9) * policy.taming_cap * std::sqrt(info.nn_dist2[i]) / b;
            if (gate < dt) dt = gate;
        }
    }
    if (dt < policy.substep_floor) {
        if (mode == FloorMode::Raise) throw SubstepFloorError(info.dmin2);
        dt = std::min(policy.substep_floor, std::min(policy.dt_max, dt_cap));
        events.push_back({state.t, EventKind::SubstepFloorHit, 0, 0.0, {}, info.dmin2});
        if (stats) ++stats->floor_hits;
    }

    std::vector<int> tamed;
    const double root_dt = std::sqrt(dt);
    for (int i = 0; i < n; ++i) {
        Vec2 disp = info.drift[i] * dt;
        const double cap = policy.taming_cap * std::sqrt(info.nn_dist2[i]);
        const double len = disp.norm();
        if (len > cap) {
            disp = (cap > 0.0) ? disp * (cap / len) : Vec2{0.0, 0.0};
            tamed.push_back(i);
        }
        const double gx = noise.next();
        const double gy = noise.next();
        state.positions[i] += disp + Vec2{root_dt * gx, root_dt * gy};
    }
    if (!tamed.empty()) {
        const double count = static_cast<double>(tamed.size());
        events.push_back({state.t, EventKind::TamingActivated, 0, 0.0, std::move(tamed), count});
        if (stats) ++stats->taming_steps;
    }
    state.t += dt;
    if (stats) {
        ++stats->steps;
        stats->min_dt = std::min(stats->min_dt, dt);
    }
    return dt;
}

} // namespace

double step(ParticleState &state, const StepPolicy &policy, double theta, NormalSource &noise,
            std::vector<Event> &events, FloorMode mode, double dt_cap) {
    if (!state.alive) throw std::logic_error("step: state is not alive");
    validate(policy);
    if (!(dt_cap > 0.0)) throw std::invalid_argument("step: dt_cap must be > 0");
    const DriftInfo info = drift_info(state.positions, theta);
    return do_step(state, info, policy, noise, events, mode, dt_cap, nullptr);
}

namespace {

// Detector machinery. Candidate prefilter: R_K <= 1/ell forces every pairwise
// squared distance inside K below k/ell, so every member's nearest-neighbour
// squared distance is below k/ell as well.
struct DetectorBank {
    std::vector<CollapseDetector> dets;
    std::vector<char> fired;
    int stopper = -1; // index of the finest-ell k=3 detector

    explicit DetectorBank(const std::vector<CollapseDetector> &d)
        : dets(d), fired(d.size(), 0) {
        for (std::size_t i = 0; i < dets.size(); ++i)
            if (dets[i].k == 3 && (stopper < 0 || dets[i].ell > dets[stopper].ell))
                stopper = static_cast<int>(i);
    }

    static std::vector<int> candidates(const DriftInfo &info, double bound2, int cap) {
        std::vector<int> out;
        for (int i = 0; i < static_cast<int>(info.nn_dist2.size()); ++i)
            if (info.nn_dist2[i] <= bound2) out.push_back(i);
        if (static_cast<int>(out.size()) > cap) {
            std::sort(out.begin(), out.end(), [&](int a, int b) {
                return info.nn_dist2[a] < info.nn_dist2[b];
            });
            out.resize(cap);
            std::sort(out.begin(), out.end());
        }
        return out;
    }

    // returns true when the run must stop
    bool evaluate(double t, const std::vector<Vec2> &x, const DriftInfo &info,
                  std::vector<Event> &events, std::vector<int> &stop_cluster) {
        bool stop = false;
        for (std::size_t di = 0; di < dets.size(); ++di) {
            if (fired[di]) continue;
            const auto &d = dets[di];
            const double thresh = 1.0 / d.ell;
            bool fire = false;
            std::vector<int> cluster;
            double best = kInf;

            if (d.k == 2) {
                if (info.dmin2 / 2.0 <= thresh) {
                    fire = true;
                    best = info.dmin2 / 2.0;
                    cluster = {info.closest_i, info.closest_j};
                    std::sort(cluster.begin(), cluster.end());
                }
            } else if (d.k == 3) {
                const auto cand = candidates(info, 3.0 * thresh, 32);
                for (std::size_t a = 0; a + 2 < cand.size(); ++a)
                    for (std::size_t b = a + 1; b + 1 < cand.size(); ++b)
                        for (std::size_t c = b + 1; c < cand.size(); ++c) {
                            const double r = ((x[cand[a]] - x[cand[b]]).norm2() +
                                              (x[cand[a]] - x[cand[c]]).norm2() +
                                              (x[cand[b]] - x[cand[c]]).norm2()) /
                                             3.0;
                            if (r < best) {
                                best = r;
                                cluster = {cand[a], cand[b], cand[c]};
                            }
                        }
                fire = best <= thresh;
            } else {
                // greedy: grow a cluster around each candidate from its k-1
                // nearest particles; exact dispersion check on the result
                const auto cand = candidates(info, static_cast<double>(d.k) * thresh, 32);
                const int n = static_cast<int>(x.size());
                std::vector<std::pair<double, int>> dist;
                for (int i : cand) {
                    dist.clear();
                    for (int j = 0; j < n; ++j)
                        if (j != i) dist.push_back({(x[i] - x[j]).norm2(), j});
                    std::nth_element(dist.begin(), dist.begin() + (d.k - 2), dist.end());
                    Cluster cl{i};
                    for (int m = 0; m < d.k - 1; ++m) cl.push_back(dist[m].second);
                    std::sort(cl.begin(), cl.end());
                    const double r = cluster_dispersion(x, cl);
                    if (r < best) {
                        best = r;
                        cluster = cl;
                    }
                }
                fire = best <= thresh;
            }

            if (fire) {
                fired[di] = 1;
                events.push_back({t, EventKind::ClusterCollapse, d.k, d.ell, cluster, best});
                if (static_cast<int>(di) == stopper) {
                    stop = true;
                    stop_cluster = cluster;
                }
            }
        }
        return stop;
    }
};

} // namespace

TrajectoryRecord simulate(const SimConfig &cfg, const InitialLaw &law,
                          const std::vector<CollapseDetector> &detectors, std::uint64_t seed,
                          const std::vector<Observer> &observers) {
    validate_scalars(cfg);
    validate_detectors(detectors, cfg.n, cfg.theta);

    TrajectoryRecord rec;
    rec.theta = cfg.theta;
    rec.n = cfg.n;
    rec.horizon = cfg.horizon;
    rec.snapshot_interval = cfg.snapshot_interval;
    rec.seed = seed;

    ParticleState st;
    st.positions = sample_initial(law, cfg.n, derive_seed(seed, 1));
    rec.stats.initial_sixth_moment = sixth_moment(st.positions);
    EngineNormal noise(derive_seed(seed, 2));

    DetectorBank bank(detectors);

    rec.snapshots.push_back({0.0, st.positions});
    for (const auto &obs : observers) obs(st);

    long long snap_idx = 1;
    auto next_boundary = [&]() {
        const double g = cfg.snapshot_interval * static_cast<double>(snap_idx);
        return std::min(g, cfg.horizon);
    };

    while (st.t < cfg.horizon && st.alive) {
        const DriftInfo info = drift_info(st.positions, cfg.theta);
        std::vector<int> stop_cluster;
        if (bank.evaluate(st.t, st.positions, info, rec.events, stop_cluster)) {
            st.alive = false;
            rec.collapsed = true;
            rec.collapse_time = st.t;
            rec.collapse_cluster = stop_cluster;
            break;
        }
        const double boundary = next_boundary();
        do_step(st, info, cfg.policy, noise, rec.events, FloorMode::ClampAndLog,
                boundary - st.t, &rec.stats);
        if (st.t >= boundary - 1e-12 * std::max(1.0, boundary)) {
            st.t = boundary; // land on the output grid exactly
            rec.snapshots.push_back({st.t, st.positions});
            while (cfg.snapshot_interval * static_cast<double>(snap_idx) <= boundary)
                ++snap_idx;
        }
        for (const auto &obs : observers) obs(st);
    }

    if (st.alive && cfg.horizon > 0.0) {
        // final detector sweep at the horizon
        const DriftInfo info = drift_info(st.positions, cfg.theta);
        std::vector<int> stop_cluster;
        if (bank.evaluate(st.t, st.positions, info, rec.events, stop_cluster)) {
            st.alive = false;
            rec.collapsed = true;
            rec.collapse_time = st.t;
            rec.collapse_cluster = stop_cluster;
        }
    } else if (st.alive && cfg.horizon == 0.0) {
        const DriftInfo info = drift_info(st.positions, cfg.theta);
        std::vector<int> stop_cluster;
        if (bank.evaluate(0.0, st.positions, info, rec.events, stop_cluster)) {
            rec.collapsed = true;
            rec.collapse_time = 0.0;
            rec.collapse_cluster = stop_cluster;
        }
    }

    if (rec.collapsed) {
        // freeze the remaining output grid at the final positions
        double g = cfg.snapshot_interval * static_cast<double>(snap_idx);
        while (g < cfg.horizon) {
            rec.snapshots.push_back({g, st.positions});
            ++snap_idx;
            g = cfg.snapshot_interval * static_cast<double>(snap_idx);
        }
        if (rec.snapshots.back().t < cfg.horizon)
            rec.snapshots.push_back({cfg.horizon, st.positions});
    }
    return rec;
}

std::optional<double> first_collapse_time(const TrajectoryRecord &record, int k, double ell) {
    for (const auto &e : record.events)
        if (e.kind == EventKind::ClusterCollapse && e.k == k && e.ell == ell)
            return e.t;
    return std::nullopt;
}

} // namespace kslab
