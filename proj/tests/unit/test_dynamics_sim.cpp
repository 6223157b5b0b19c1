#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "kslab/dynamics.hpp"

using namespace kslab;

namespace {

SimConfig base_config() {
    SimConfig cfg;
    cfg.theta = 1.0;
    cfg.n = 6;
    cfg.horizon = 0.2;
    cfg.snapshot_interval = 0.05;
    cfg.law.kind = LawKind::GaussianIID;
    return cfg;
}

bool same_positions(const std::vector<Vec2> &a, const std::vector<Vec2> &b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) return false;
    return true;
}

} // namespace

TEST_SUITE_BEGIN("dynamics_sim");

TEST_CASE("minimal population for subcritical theta") {
    CHECK(min_population(1.9) == 21);
    CHECK(min_population(1.75) == 9);
    CHECK(min_population(1.5) == 5);
    CHECK(min_population(1.0) == 5);
    CHECK(min_population(0.5) == 5);
    CHECK(min_population(2.0) == 5);
    CHECK(min_population(3.0) == 5);
}

TEST_CASE("config validation enforces the population floor and detector rules") {
    SimConfig cfg = base_config();
    cfg.theta = 1.9;
    cfg.n = 5;
    CHECK_THROWS_WITH_AS(validate(cfg),
                         "config: n below the subcritical floor 1+ceil(2/(2-theta)) = 21",
                         std::invalid_argument);
    cfg.n = 21;
    CHECK_NOTHROW(validate(cfg));

    cfg = base_config();
    cfg.theta = 2.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument); // needs a k=3 detector
    cfg.detectors.push_back({3, 1e6});
    CHECK_NOTHROW(validate(cfg));

    cfg = base_config();
    cfg.detectors.push_back({7, 10.0}); // k > n
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.detectors = {{1, 10.0}};
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg.detectors = {{3, 0.5}};
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    cfg = base_config();
    cfg.theta = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.snapshot_interval = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.replicas = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("zero horizon yields only the initial snapshot") {
    SimConfig cfg = base_config();
    cfg.horizon = 0.0;
    const auto rec = simulate(cfg, cfg.law, {}, 42);
    REQUIRE(rec.snapshots.size() == 1);
    CHECK(rec.snapshots[0].t == 0.0);
    CHECK(rec.snapshots[0].positions.size() == 6);
    CHECK(rec.stats.steps == 0);
}

TEST_CASE("snapshot grid covers [0, horizon] with an off-grid final time") {
    SimConfig cfg = base_config();
    cfg.horizon = 0.35;
    cfg.snapshot_interval = 0.1;
    const auto rec = simulate(cfg, cfg.law, {}, 7);
    REQUIRE(rec.snapshots.size() == 5); // 0, .1, .2, .3, .35
    CHECK(rec.snapshots.front().t == 0.0);
    CHECK(rec.snapshots.back().t == 0.35);
    for (std::size_t k = 1; k < rec.snapshots.size(); ++k)
        CHECK(rec.snapshots[k].t > rec.snapshots[k - 1].t);
    for (std::size_t k = 0; k + 1 < rec.snapshots.size(); ++k)
        CHECK(rec.snapshots[k].t == doctest::Approx(0.1 * k).epsilon(1e-9));
}

TEST_CASE("identical config and seed reproduce the record bitwise") {
    SimConfig cfg = base_config();
    const auto a = simulate(cfg, cfg.law, {{2, 100.0}}, 99);
    const auto b = simulate(cfg, cfg.law, {{2, 100.0}}, 99);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        CHECK(a.snapshots[k].t == b.snapshots[k].t);
        CHECK(same_positions(a.snapshots[k].positions, b.snapshots[k].positions));
    }
    CHECK(a.events.size() == b.events.size());
    CHECK(a.stats.steps == b.stats.steps);
    CHECK(a.stats.min_dt == b.stats.min_dt);

    const auto c = simulate(cfg, cfg.law, {{2, 100.0}}, 100);
    CHECK(!same_positions(a.snapshots.back().positions, c.snapshots.back().positions));
}

TEST_CASE("observers run at t=0 and after every accepted step") {
    SimConfig cfg = base_config();
    std::vector<double> seen;
    std::vector<Observer> obs{[&](const ParticleState &st) { seen.push_back(st.t); }};
    const auto rec = simulate(cfg, cfg.law, {}, 5, obs);
    REQUIRE(!seen.empty());
    CHECK(seen.front() == 0.0);
    CHECK(static_cast<long long>(seen.size()) == rec.stats.steps + 1);
    for (std::size_t k = 1; k < seen.size(); ++k) CHECK(seen[k] >= seen[k - 1]);
    CHECK(seen.back() == cfg.horizon);
}

TEST_CASE("supercritical runs collapse and detector thresholds order correctly") {
    SimConfig cfg;
    cfg.theta = 3.0;
    cfg.n = 10;
    cfg.horizon = 20.0;
    cfg.snapshot_interval = 1.0;
    cfg.law.kind = LawKind::GaussianIID;
    const std::vector<CollapseDetector> dets{{2, 100.0}, {2, 10.0}, {3, 10.0}, {3, 1e6}, {4, 10.0}};

    const int reps = 200;
    int collapsed = 0;
    for (int r = 0; r < reps; ++r) {
        const auto rec = simulate(cfg, cfg.law, dets, derive_seed(2024, r));
        if (rec.collapsed) {
            ++collapsed;
            CHECK(rec.collapse_time < cfg.horizon);
            REQUIRE(rec.collapse_cluster.size() == 3);
        }
        // event log time ordering
        for (std::size_t k = 1; k < rec.events.size(); ++k)
            CHECK(rec.events[k].t >= rec.events[k - 1].t);
        // collapse payload sanity + threshold ordering
        for (const auto &e : rec.events) {
            if (e.kind != EventKind::ClusterCollapse) continue;
            CHECK(static_cast<int>(e.cluster.size()) == e.k);
            CHECK(e.value <= 1.0 / e.ell * (1 + 1e-12));
            for (std::size_t m = 1; m < e.cluster.size(); ++m)
                CHECK(e.cluster[m] > e.cluster[m - 1]);
            CHECK(e.cluster.front() >= 0);
            CHECK(e.cluster.back() < cfg.n);
        }
        const auto t2c = first_collapse_time(rec, 2, 10.0);
        const auto t2f = first_collapse_time(rec, 2, 100.0);
        if (t2c && t2f) CHECK(*t2c <= *t2f);
        const auto t3c = first_collapse_time(rec, 3, 10.0);
        const auto t3f = first_collapse_time(rec, 3, 1e6);
        if (t3c && t3f) CHECK(*t3c <= *t3f);
        if (rec.collapsed) {
            REQUIRE(t3f.has_value());
            CHECK(*t3f == rec.collapse_time);
        }
    }
    CHECK(collapsed >= 198); // >= 99% of 200
}

TEST_CASE("collapse freezes the remaining snapshot grid") {
    SimConfig cfg;
    cfg.theta = 3.0;
    cfg.n = 10;
    cfg.horizon = 20.0;
    cfg.snapshot_interval = 1.0;
    cfg.law.kind = LawKind::GaussianIID;
    const std::vector<CollapseDetector> dets{{3, 1e6}};
    TrajectoryRecord rec;
    bool found = false;
    for (int r = 0; r < 10 && !found; ++r) {
        rec = simulate(cfg, cfg.law, dets, derive_seed(888, r));
        found = rec.collapsed;
    }
    REQUIRE(found);
    CHECK(rec.snapshots.size() == 21); // full grid 0..20 despite early stop
    CHECK(rec.snapshots.back().t == cfg.horizon);
    const std::vector<Vec2> *frozen = nullptr;
    for (const auto &snap : rec.snapshots) {
        if (snap.t <= rec.collapse_time) continue;
        if (!frozen)
            frozen = &snap.positions;
        else
            CHECK(same_positions(*frozen, snap.positions));
    }
}

TEST_CASE("every collapse cluster holds a pair within sqrt(2/ell)") {
    SimConfig cfg;
    cfg.theta = 3.0;
    cfg.n = 10;
    cfg.horizon = 20.0;
    cfg.snapshot_interval = 1.0;
    cfg.law.kind = LawKind::GaussianIID;
    const std::vector<CollapseDetector> dets{{2, 50.0}, {3, 1e4}, {3, 1e6}, {5, 20.0}};

    std::map<double, std::vector<Vec2>> states;
    std::vector<Observer> obs{
        [&](const ParticleState &st) { states[st.t] = st.positions; }};
    const auto rec = simulate(cfg, cfg.law, dets, 31415, obs);
    REQUIRE(rec.collapsed);
    int checked = 0;
    for (const auto &e : rec.events) {
        if (e.kind != EventKind::ClusterCollapse) continue;
        const auto it = states.find(e.t);
        REQUIRE(it != states.end());
        const auto &x = it->second;
        // recomputed dispersion matches the logged detection value
        CHECK(cluster_dispersion(x, e.cluster) == doctest::Approx(e.value).epsilon(1e-10));
        double pmin = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < e.cluster.size(); ++a)
            for (std::size_t b = a + 1; b < e.cluster.size(); ++b)
                pmin = std::min(pmin, (x[e.cluster[a]] - x[e.cluster[b]]).norm2());
        CHECK(pmin <= 2.0 / e.ell * (1 + 1e-12));
        ++checked;
    }
    CHECK(checked >= 2);
}

TEST_CASE("subcritical runs stay clear of triple collapses") {
    SimConfig cfg;
    cfg.theta = 1.0;
    cfg.n = 50;
    cfg.horizon = 5.0;
    cfg.snapshot_interval = 1.0;
    cfg.law.kind = LawKind::GaussianIID;
    const std::vector<CollapseDetector> dets{{3, 1e6}};
    for (int r = 0; r < 12; ++r) {
        const auto rec = simulate(cfg, cfg.law, dets, derive_seed(606060, r));
        CHECK(!rec.collapsed);
        CHECK(!first_collapse_time(rec, 3, 1e6).has_value());
        CHECK(rec.snapshots.back().t == cfg.horizon);
    }
}

TEST_CASE("first_collapse_time reads the event log") {
    TrajectoryRecord rec;
    CHECK(!first_collapse_time(rec, 3, 10.0).has_value());
    rec.events.push_back({0.5, EventKind::TamingActivated, 0, 0.0, {1}, 1.0});
    rec.events.push_back({1.5, EventKind::ClusterCollapse, 3, 10.0, {0, 1, 2}, 0.05});
    rec.events.push_back({2.0, EventKind::ClusterCollapse, 3, 10.0, {3, 4, 5}, 0.04});
    rec.events.push_back({2.5, EventKind::ClusterCollapse, 2, 10.0, {0, 1}, 0.01});
    const auto t = first_collapse_time(rec, 3, 10.0);
    REQUIRE(t.has_value());
    CHECK(*t == 1.5);
    CHECK(!first_collapse_time(rec, 4, 10.0).has_value());
    CHECK(first_collapse_time(rec, 2, 10.0).value() == 2.5);
}

TEST_SUITE_END();
