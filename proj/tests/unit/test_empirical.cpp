#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kslab/empirical_measure.hpp"
#include "kslab/dynamics.hpp"
#include "kslab/rng.hpp"

using namespace kslab;

namespace {

const TestFunctionFamily &shared_family() {
    static const TestFunctionFamily fam = make_test_family();
    return fam;
}

EmpiricalMeasure atom(double x, double y) { return measure_of({{x, y}}); }

EmpiricalMeasure random_cloud(std::mt19937_64 &eng, int count) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < count; ++i)
        pts.push_back({g(eng), g(eng)});
    return measure_of(pts);
}

} // namespace

TEST_SUITE("empirical_measure") {

TEST_CASE("family construction and content hash") {
    const auto &fam = shared_family();
    REQUIRE(fam.terms.size() == 64);
    CHECK(fam.terms[0].wave == Vec2{0.0, 0.0});
    CHECK(!fam.terms[0].odd);
    // first frequency pair: cos and sin of the same lattice vector
    CHECK(fam.terms[1].wave == Vec2{0.0, 0.7});
    CHECK(!fam.terms[1].odd);
    CHECK(fam.terms[2].wave == Vec2{0.0, 0.7});
    CHECK(fam.terms[2].odd);
    for (const auto &f : fam.terms)
        CHECK(f.amp > 0.0);

    CHECK(make_test_family().content_hash == fam.content_hash);
    CHECK(make_test_family(32).content_hash != fam.content_hash);
    CHECK(make_test_family(64, 2.0, 0.8).content_hash != fam.content_hash);
    CHECK(make_test_family(64, 2.5, 0.7).content_hash != fam.content_hash);

    CHECK_THROWS_AS(make_test_family(0), std::invalid_argument);
    CHECK_THROWS_AS(make_test_family(8, -1.0, 0.7), std::invalid_argument);
}

TEST_CASE("every family term satisfies the unit C2 bound on a dense grid") {
    const auto &fam = shared_family();
    // 10^6-point verification grid, wider and finer than the build grid
    const int grid = 1001;
    const double extent = 9.0;
    for (const auto &f : fam.terms) {
        double sup = 0.0;
        for (int gx = 0; gx < grid; ++gx) {
            const double x = -extent + 2.0 * extent * gx / (grid - 1);
            for (int gy = 0; gy < grid; ++gy) {
                const double y = -extent + 2.0 * extent * gy / (grid - 1);
                sup = std::max(sup, f.c2_norm_at({x, y}));
            }
        }
        CHECK(sup <= 1.0 + 1e-6);
        CHECK(sup > 0.5); // normalization is tight, not vacuous
    }
}

TEST_CASE("derivatives of family terms match finite differences") {
    const auto &fam = shared_family();
    const double h = 1e-5;
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{8}, std::size_t{33}}) {
        const auto &f = fam.terms[n];
        for (Vec2 x : {Vec2{0.3, -0.4}, Vec2{1.7, 2.1}, Vec2{-2.2, 0.9}}) {
            const Vec2 g = f.gradient(x);
            const double gx = (f.value({x.x + h, x.y}) - f.value({x.x - h, x.y})) / (2 * h);
            const double gy = (f.value({x.x, x.y + h}) - f.value({x.x, x.y - h})) / (2 * h);
            CHECK(g.x == doctest::Approx(gx).epsilon(1e-6));
            CHECK(g.y == doctest::Approx(gy).epsilon(1e-6));
            const auto hess = f.hessian(x);
            const double hxx =
                (f.value({x.x + h, x.y}) - 2 * f.value(x) + f.value({x.x - h, x.y})) / (h * h);
            const double hyy =
                (f.value({x.x, x.y + h}) - 2 * f.value(x) + f.value({x.x, x.y - h})) / (h * h);
            const double hxy = (f.value({x.x + h, x.y + h}) - f.value({x.x + h, x.y - h}) -
                                f.value({x.x - h, x.y + h}) + f.value({x.x - h, x.y - h})) /
                               (4 * h * h);
            CHECK(hess[0] == doctest::Approx(hxx).epsilon(1e-4));
            CHECK(hess[1] == doctest::Approx(hxy).epsilon(1e-4));
            CHECK(hess[2] == doctest::Approx(hyy).epsilon(1e-4));
            CHECK(f.laplacian(x) == doctest::Approx(hess[0] + hess[2]).epsilon(1e-12));
        }
    }
}

TEST_CASE("weak distance basics") {
    const auto &fam = shared_family();
    std::mt19937_64 eng(7);
    auto mu = random_cloud(eng, 12);
    auto nu = random_cloud(eng, 9);

    CHECK(weak_distance(mu, mu, fam, 64).value == 0.0);
    const auto ab = weak_distance(mu, nu, fam, 64);
    const auto ba = weak_distance(nu, mu, fam, 64);
    CHECK(ab.value == ba.value); // exact symmetry
    CHECK(ab.value > 0.0);
    CHECK(ab.tail == 2.0 * std::pow(2.0, -64));
    CHECK(weak_distance(mu, nu, fam, 8).tail == 2.0 * std::pow(2.0, -8));

    // single atoms drifting apart: delta grows with d and obeys the
    // Lipschitz bound min(d, 2)
    double prev = -1.0;
    for (double d : {0.01, 0.05, 0.1, 0.5, 1.0}) {
        const auto w = weak_distance(atom(0, 0), atom(d, 0), fam, 64);
        CHECK(w.value > prev);
        CHECK(w.value <= std::min(d, 2.0));
        prev = w.value;
    }
    CHECK(weak_distance(atom(0, 0), atom(100, 0), fam, 64).value <= 2.0);

    CHECK_THROWS_AS(weak_distance(mu, nu, fam, 0), std::invalid_argument);
    CHECK_THROWS_AS(weak_distance(mu, nu, fam, 65), std::invalid_argument);
    CHECK_THROWS_AS(measure_of({}), std::invalid_argument);
}

TEST_CASE("weak distance triangle inequality on random triples") {
    const auto &fam = shared_family();
    std::mt19937_64 eng(123);
    std::uniform_int_distribution<int> size(5, 30);
    for (int rep = 0; rep < 20; ++rep) {
        auto mu = random_cloud(eng, size(eng));
        auto nu = random_cloud(eng, size(eng));
        auto rho = random_cloud(eng, size(eng));
        const double ab = weak_distance(mu, nu, fam, 64).value;
        const double ac = weak_distance(mu, rho, fam, 64).value;
        const double cb = weak_distance(rho, nu, fam, 64).value;
        CHECK(ab <= ac + cb + 1e-12);
    }
}

TEST_CASE("holder modulus of measure paths") {
    const auto &fam = shared_family();

    std::vector<std::pair<double, EmpiricalMeasure>> flat;
    for (int k = 0; k <= 10; ++k)
        flat.push_back({0.1 * k, atom(0.4, -0.2)});
    CHECK(holder_modulus(flat, fam, 64) == 0.0);

    // one Brownian atom simulated at fine resolution, then subsampled
    const int fine_steps = 1024;
    const double h = 1.0 / fine_steps;
    EngineNormal noise(314);
    Vec2 x{0, 0};
    std::vector<std::pair<double, EmpiricalMeasure>> fine, coarse;
    fine.push_back({0.0, measure_of({x})});
    coarse.push_back({0.0, measure_of({x})});
    for (int k = 1; k <= fine_steps; ++k) {
        x += Vec2{std::sqrt(h) * noise.next(), std::sqrt(h) * noise.next()};
        fine.push_back({h * k, measure_of({x})});
        if (k % 16 == 0)
            coarse.push_back({h * k, measure_of({x})});
    }
    const double m_coarse = holder_modulus(coarse, fam, 64);
    const double m_fine = holder_modulus(fine, fam, 64);
    CHECK(m_coarse > 0.0);
    CHECK(std::isfinite(m_fine));
    CHECK(m_fine >= m_coarse); // the coarse pairs are a subset
    // exponent 1/4 is stable under refinement: coarse pairs dominate
    CHECK(m_fine <= 1.5 * m_coarse);
    // exponent 1 is not: fine increments scale like dt^{-1/2}
    const double l_coarse = holder_modulus(coarse, fam, 64, 1.0);
    const double l_fine = holder_modulus(fine, fam, 64, 1.0);
    CHECK(l_fine >= 3.0 * l_coarse);

    CHECK_THROWS_AS(holder_modulus({flat[0]}, fam, 64), std::invalid_argument);
    CHECK_THROWS_AS(holder_modulus(flat, fam, 64, 0.0), std::invalid_argument);
}

TEST_CASE("weak solution residual vanishes for constant test functions") {
    SimConfig cfg;
    cfg.theta = 1.0;
    cfg.n = 16;
    cfg.horizon = 1.0;
    cfg.snapshot_interval = 0.05;
    InitialLaw law;
    auto rec = simulate(cfg, law, {}, 99);

    C2Function one;
    one.value = [](const Vec2 &) { return 1.0; };
    one.gradient = [](const Vec2 &) { return Vec2{0.0, 0.0}; };
    one.laplacian = [](const Vec2 &) { return 0.0; };
    auto res = weak_solution_residual(rec, one, {0.0, 0.25, 0.5, 1.0});
    REQUIRE(res.series.v.size() == 4);
    for (double v : res.series.v)
        CHECK(v == 0.0); // exact cancellation
    CHECK(!res.coarse_quadrature);
    CHECK(res.max_spacing == doctest::Approx(0.05));
}

TEST_CASE("weak solution residual of a linear function is the centroid term") {
    SimConfig cfg;
    cfg.theta = 1.5;
    cfg.n = 12;
    cfg.horizon = 1.0;
    cfg.snapshot_interval = 0.1;
    InitialLaw law;
    auto rec = simulate(cfg, law, {}, 101);

    const Vec2 w{0.3, -1.2};
    C2Function lin;
    lin.value = [w](const Vec2 &x) { return dot(w, x); };
    lin.gradient = [w](const Vec2 &) { return w; };
    lin.laplacian = [](const Vec2 &) { return 0.0; };
    auto res = weak_solution_residual(rec, lin, {0.5, 1.0});
    for (std::size_t k = 0; k < res.series.t.size(); ++k) {
        // locate the snapshot and compare with the centroid displacement
        Vec2 c0{0, 0}, ct{0, 0};
        for (const auto &p : rec.snapshots.front().positions)
            c0 += p;
        for (const auto &snap : rec.snapshots)
            if (snap.t == res.series.t[k]) {
                ct = {0, 0};
                for (const auto &p : snap.positions)
                    ct += p;
            }
        const double expected = dot(w, (ct - c0) * (1.0 / 12.0));
        CHECK(res.series.v[k] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("weak solution residual is invariant under constant shifts") {
    const auto &fam = shared_family();
    SimConfig cfg;
    cfg.theta = 1.0;
    cfg.n = 10;
    cfg.horizon = 0.5;
    cfg.snapshot_interval = 0.05;
    InitialLaw law;
    auto rec = simulate(cfg, law, {}, 202);

    const TestFunction &phi = fam.terms[3];
    const std::vector<double> times{0.1, 0.3, 0.5};
    auto base = weak_solution_residual(rec, as_c2(phi), times);
    for (double c : {1.0, -3.5, 1000.0}) {
        C2Function shifted = as_c2(phi);
        shifted.value = [&phi, c](const Vec2 &x) { return phi.value(x) + c; };
        auto moved = weak_solution_residual(rec, shifted, times);
        for (std::size_t k = 0; k < times.size(); ++k)
            CHECK(std::abs(moved.series.v[k] - base.series.v[k]) <=
                  1e-12 * (1.0 + std::abs(c)));
    }
}

TEST_CASE("residual fluctuations shrink like the inverse root of the population") {
    const auto &fam = shared_family();
    const TestFunction &phi = fam.terms[1];
    std::vector<double> rms;
    for (int n : {32, 128}) {
        SimConfig cfg;
        cfg.theta = 1.0;
        cfg.n = n;
        cfg.horizon = 1.0;
        cfg.snapshot_interval = 0.01;
        InitialLaw law;
        double acc = 0.0;
        const int reps = 60;
        for (int r = 0; r < reps; ++r) {
            auto rec = simulate(cfg, law, {}, derive_seed(9500 + n, r));
            auto res = weak_solution_residual(rec, as_c2(phi), {1.0});
            CHECK(!res.coarse_quadrature);
            acc += res.series.v[0] * res.series.v[0];
        }
        rms.push_back(std::sqrt(acc / reps));
    }
    CHECK(rms[1] < rms[0]);
    const double ratio = rms[0] / rms[1];
    CHECK(ratio >= 1.4);
    CHECK(ratio <= 2.8);
}

TEST_CASE("diffuseness monitor") {
    auto spread = measure_of({{0, 0}, {10, 0}, {0, 10}, {-10, -10}});
    auto d = diffuseness_monitor(spread, 0.5);
    CHECK(d.near_fraction == 0.0);
    CHECK(d.coincident_fraction == 0.0);

    auto same = measure_of(std::vector<Vec2>(6, Vec2{1.0, 2.0}));
    auto ds = diffuseness_monitor(same, 1e-9);
    CHECK(ds.near_fraction == 1.0);
    CHECK(ds.coincident_fraction == 1.0);

    // one coincident pair among five atoms: 1 of 10 unordered pairs
    auto mixed = measure_of({{0, 0}, {0, 0}, {3, 0}, {0, 3}, {-3, -3}});
    auto dm = diffuseness_monitor(mixed, 0.1);
    CHECK(dm.near_fraction == doctest::Approx(0.1));
    CHECK(dm.coincident_fraction == doctest::Approx(0.1));
    CHECK(diffuseness_monitor(mixed, 100.0).near_fraction == 1.0);

    CHECK_THROWS_AS(diffuseness_monitor(spread, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(diffuseness_monitor(measure_of({{1, 1}}), -1.0), std::invalid_argument);
    CHECK(diffuseness_monitor(measure_of({{1, 1}}), 1.0).near_fraction == 0.0);
}

TEST_CASE("critical paths carry no exact coincidences before blow-up") {
    SimConfig cfg;
    cfg.theta = 2.0;
    cfg.n = 128;
    cfg.horizon = 0.3;
    cfg.snapshot_interval = 0.05;
    InitialLaw law;
    std::vector<CollapseDetector> dets = {{3, 1e9}};
    double integrated = 0.0;
    for (int r = 0; r < 2; ++r) {
        auto rec = simulate(cfg, law, dets, derive_seed(9600, r));
        for (const auto &snap : rec.snapshots) {
            if (rec.collapsed && snap.t >= rec.collapse_time)
                break;
            auto d = diffuseness_monitor(measure_of(snap.positions), 1e-12);
            CHECK(d.coincident_fraction == 0.0);
            integrated += d.coincident_fraction;
        }
    }
    CHECK(integrated == 0.0);
}

} // TEST_SUITE
