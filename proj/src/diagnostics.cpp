#include "kslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kslab/geometry.hpp"
#include "kslab/rng.hpp"

namespace kslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Cluster full_cluster(int n) {
    Cluster k(static_cast<std::size_t>(n));
    std::iota(k.begin(), k.end(), 0);
    return k;
}

// type-7 quantile on a sorted vector; censored +inf entries are kept and
// dominate any interpolation they touch
double quantile_sorted(const std::vector<double> &x, double p) {
    if (x.empty())
        throw std::invalid_argument("quantile: empty sample");
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= x.size())
        return x.back();
    const double frac = pos - static_cast<double>(lo);
    const double a = x[lo], b = x[lo + 1];
    if (a == b || frac == 0.0)
        return a;
    if (!std::isfinite(a) || !std::isfinite(b))
        return b;
    return a + frac * (b - a);
}

struct RatioFit {
    double slope = 0.0;
    double std_error = 0.0;
    long long n = 0;
};

// slope = sum(y)/sum(x) with the usual ratio-estimator standard error
RatioFit ratio_fit(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("ratio_fit: mismatched or empty samples");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    if (!(sx > 0.0))
        throw std::invalid_argument("ratio_fit: nonpositive total abscissa");
    RatioFit fit;
    fit.slope = sy / sx;
    fit.n = static_cast<long long>(x.size());
    if (x.size() > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.slope * x[i];
            ss += r * r;
        }
        const double m = static_cast<double>(x.size());
        fit.std_error = std::sqrt(ss / (m - 1.0)) * std::sqrt(m) / sx;
    }
    return fit;
}

double mean_pair_value(const std::vector<Vec2> &pts,
                       const std::function<double(double)> &f) {
    const std::size_t n = pts.size();
    if (n < 2)
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += f((pts[i] - pts[j]).norm2());
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

} // namespace

DimensionTable dimension_table(double theta, int n) {
    if (n < 2)
        throw std::invalid_argument("dimension_table: n must be at least 2");
    if (!(theta > 0.0))
        throw std::invalid_argument("dimension_table: theta must be positive");
    DimensionTable tab;
    tab.theta = theta;
    tab.n = n;
    tab.d.reserve(static_cast<std::size_t>(n - 1));
    for (int k = 2; k <= n; ++k)
        tab.d.push_back(static_cast<double>(k - 1) *
                        (2.0 - static_cast<double>(k) * theta / static_cast<double>(n)));
    if (theta == 2.0) {
        // at theta = 2, d(k) < 2 is exactly (k-1)(n-k) < n in integers
        for (int k = 3; k <= n; ++k) {
            if (static_cast<long long>(k - 1) * static_cast<long long>(n - k) <
                static_cast<long long>(n)) {
                tab.k2 = k;
                break;
            }
        }
    }
    return tab;
}

Series global_dispersion_path(const TrajectoryRecord &record) {
    Series s;
    const Cluster all = full_cluster(record.n);
    s.t.reserve(record.snapshots.size());
    s.v.reserve(record.snapshots.size());
    for (const auto &snap : record.snapshots) {
        s.t.push_back(snap.t);
        s.v.push_back(cluster_dispersion(snap.positions, all));
    }
    return s;
}

RPath r_path(const TrajectoryRecord &record) {
    RPath p;
    Series s = global_dispersion_path(record);
    p.t = std::move(s.t);
    p.r = std::move(s.v);
    p.collapsed = record.collapsed;
    p.stop_time = record.collapsed ? record.collapse_time : record.horizon;
    return p;
}

DriftEstimate bessel_drift_test(const std::vector<RPath> &paths, double, int) {
    if (paths.size() < 30)
        throw std::invalid_argument("bessel_drift_test: at least 30 replicas required");
    std::vector<double> dr, tau;
    dr.reserve(paths.size());
    tau.reserve(paths.size());
    for (const auto &p : paths) {
        if (p.r.size() < 2)
            throw std::invalid_argument("bessel_drift_test: path with fewer than 2 points");
        dr.push_back(p.r.back() - p.r.front());
        tau.push_back(p.stop_time);
    }
    const RatioFit fit = ratio_fit(tau, dr);
    return DriftEstimate{fit.slope, fit.std_error, fit.n};
}

DriftEstimate bessel_qv_test(const std::vector<RPath> &paths) {
    if (paths.empty())
        throw std::invalid_argument("bessel_qv_test: no paths");
    // compensate increments with the pooled drift estimate from the same paths
    double drift = 0.0;
    {
        double sdr = 0.0, stau = 0.0;
        for (const auto &p : paths) {
            if (p.r.size() < 2)
                throw std::invalid_argument("bessel_qv_test: path with fewer than 2 points");
            sdr += p.r.back() - p.r.front();
            stau += p.stop_time;
        }
        if (stau > 0.0)
            drift = sdr / stau;
    }
    std::vector<double> x, y;
    for (const auto &p : paths) {
        const double cut = p.collapsed ? 0.9 * p.stop_time : p.stop_time;
        for (std::size_t k = 0; k + 1 < p.t.size(); ++k) {
            const double dt = p.t[k + 1] - p.t[k];
            if (!(dt > 0.0) || p.t[k + 1] > cut)
                continue;
            const double inc = p.r[k + 1] - p.r[k] - drift * dt;
            x.push_back(4.0 * p.r[k] * dt);
            y.push_back(inc * inc);
        }
    }
    if (x.empty())
        throw std::invalid_argument("bessel_qv_test: no usable increments");
    double sx = 0.0;
    for (double v : x)
        sx += v;
    if (sx == 0.0)
        return DriftEstimate{0.0, 0.0, static_cast<long long>(x.size())};
    const RatioFit fit = ratio_fit(x, y);
    return DriftEstimate{fit.slope, fit.std_error, fit.n};
}

MomentIntegral pair_moment_integral(const std::vector<TrajectoryRecord> &records, double gamma,
                                    double horizon) {
    if (records.empty())
        throw std::invalid_argument("pair_moment_integral: no records");
    if (!(horizon >= 0.0))
        throw std::invalid_argument("pair_moment_integral: horizon must be nonnegative");
    const double expo = 0.5 * (gamma - 2.0);
    double total = 0.0;
    for (const auto &rec : records) {
        if (!(gamma > rec.theta && gamma < 2.0))
            throw std::invalid_argument(
                "pair_moment_integral: gamma must lie strictly between theta and 2");
        const double cut = rec.collapsed ? rec.collapse_time : rec.horizon;
        const double upper = std::min(horizon, cut);
        auto integrand = [&](std::size_t s) {
            const auto &pts = rec.snapshots[s].positions;
            double sum = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t j = i + 1; j < pts.size(); ++j)
                    sum += std::pow((pts[i] - pts[j]).norm2(), expo);
            return sum / (0.5 * static_cast<double>(pts.size()) *
                          static_cast<double>(pts.size() - 1));
        };
        double acc = 0.0;
        double f_lo = rec.snapshots.empty() ? 0.0 : integrand(0);
        for (std::size_t s = 0; s + 1 < rec.snapshots.size(); ++s) {
            const double t0 = rec.snapshots[s].t, t1 = rec.snapshots[s + 1].t;
            if (t0 >= upper)
                break;
            const double f_hi = integrand(s + 1);
            if (t1 <= upper) {
                acc += 0.5 * (f_lo + f_hi) * (t1 - t0);
            } else {
                // horizon or collapse lands inside this segment
                const double w = (upper - t0) / (t1 - t0);
                const double f_up = f_lo + w * (f_hi - f_lo);
                acc += 0.5 * (f_lo + f_up) * (upper - t0);
                break;
            }
            f_lo = f_hi;
        }
        total += acc;
    }
    MomentIntegral out;
    out.gamma = gamma;
    out.value = total / static_cast<double>(records.size());
    out.horizon = horizon;
    return out;
}

DriftEstimate variance_drift_test(const std::vector<TrajectoryRecord> &records) {
    if (records.empty())
        throw std::invalid_argument("variance_drift_test: no records");
    const int n = records.front().n;
    std::vector<RPath> paths;
    paths.reserve(records.size());
    for (const auto &rec : records) {
        if (rec.n != n)
            throw std::invalid_argument("variance_drift_test: mixed population sizes");
        RPath p = r_path(rec);
        for (double &v : p.r)
            v /= static_cast<double>(n);
        paths.push_back(std::move(p));
    }
    return bessel_drift_test(paths, records.front().theta, n);
}

GMonitor g_functional_monitor(const TrajectoryRecord &record, long long triple_budget,
                              std::uint64_t seed) {
    if (triple_budget < 1)
        throw std::invalid_argument("g_functional_monitor: triple budget must be positive");
    const int n = record.n;
    if (n < 3)
        throw std::invalid_argument("g_functional_monitor: needs at least 3 particles");
    GMonitor mon;
    const bool full = n <= 32;
    if (full)
        mon.triples_per_snapshot =
            static_cast<long long>(n) * (n - 1) * (n - 2) / 6;
    else
        mon.triples_per_snapshot = triple_budget;
    mon.avg.t.reserve(record.snapshots.size());
    mon.avg.v.reserve(record.snapshots.size());
    mon.exceedances.reserve(record.snapshots.size());
    for (std::size_t s = 0; s < record.snapshots.size(); ++s) {
        const auto &pts = record.snapshots[s].positions;
        double sum = 0.0;
        long long bad = 0;
        auto absorb = [&](double g) {
            if (std::isinf(g))
                ++bad;
            sum += g;
        };
        if (full) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    for (int k = j + 1; k < n; ++k)
                        absorb(g_functional(pts[static_cast<std::size_t>(i)],
                                            pts[static_cast<std::size_t>(j)],
                                            pts[static_cast<std::size_t>(k)]));
        } else {
            std::mt19937_64 eng(derive_seed(seed, static_cast<std::uint64_t>(s)));
            std::uniform_int_distribution<int> pick(0, n - 1);
            for (long long b = 0; b < triple_budget; ++b) {
                int i = pick(eng), j = pick(eng), k = pick(eng);
                while (j == i)
                    j = pick(eng);
                while (k == i || k == j)
                    k = pick(eng);
                absorb(g_functional(pts[static_cast<std::size_t>(i)],
                                    pts[static_cast<std::size_t>(j)],
                                    pts[static_cast<std::size_t>(k)]));
            }
        }
        mon.avg.t.push_back(record.snapshots[s].t);
        mon.avg.v.push_back(sum / static_cast<double>(mon.triples_per_snapshot));
        mon.exceedances.push_back(bad);
    }
    return mon;
}

Series pair_functional_monitor(const TrajectoryRecord &record,
                               const std::function<double(double)> &f) {
    Series s;
    s.t.reserve(record.snapshots.size());
    s.v.reserve(record.snapshots.size());
    for (const auto &snap : record.snapshots) {
        s.t.push_back(snap.t);
        s.v.push_back(mean_pair_value(snap.positions, f));
    }
    return s;
}

double mann_whitney_one_sided(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("mann_whitney_one_sided: empty sample");
    struct Tagged {
        double v;
        bool from_b;
    };
    std::vector<Tagged> all;
    all.reserve(a.size() + b.size());
    for (double v : a)
        all.push_back({v, false});
    for (double v : b)
        all.push_back({v, true});
    std::sort(all.begin(), all.end(), [](const Tagged &l, const Tagged &r) { return l.v < r.v; });
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double nt = na + nb;
    double rank_sum_b = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && !(all[i].v < all[j].v))
            ++j;
        const double count = static_cast<double>(j - i);
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (all[k].from_b)
                rank_sum_b += midrank;
        tie_term += count * count * count - count;
        i = j;
    }
    const double u_b = rank_sum_b - nb * (nb + 1.0) / 2.0;
    const double mean = na * nb / 2.0;
    const double var =
        na * nb / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if (!(var > 0.0))
        return u_b > mean ? 0.0 : (u_b < mean ? 1.0 : 0.5);
    const double z = (u_b - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

ExplosionSummary explosion_time_summary(const std::vector<ExplosionGroup> &groups) {
    if (groups.empty())
        throw std::invalid_argument("explosion_time_summary: no groups");
    ExplosionSummary out;
    std::vector<std::vector<double>> samples;
    int prev_n = 0;
    for (const auto &g : groups) {
        if (g.n <= prev_n)
            throw std::invalid_argument(
                "explosion_time_summary: population sizes must be strictly increasing");
        prev_n = g.n;
        if (g.taus.size() < 50)
            throw std::invalid_argument(
                "explosion_time_summary: at least 50 replicas per population size required");
        std::vector<double> xs;
        xs.reserve(g.taus.size());
        int hit = 0;
        for (const auto &t : g.taus) {
            if (t.has_value()) {
                xs.push_back(*t);
                ++hit;
            } else {
                xs.push_back(kInf); // censored: never collapsed inside the horizon
            }
        }
        std::sort(xs.begin(), xs.end());
        ExplosionRow row;
        row.n = g.n;
        row.replicas = static_cast<int>(g.taus.size());
        row.collapsed = hit;
        row.median = quantile_sorted(xs, 0.5);
        const double q1 = quantile_sorted(xs, 0.25);
        const double q3 = quantile_sorted(xs, 0.75);
        row.iqr = (std::isfinite(q1) && std::isfinite(q3)) ? q3 - q1 : kInf;
        row.hypothesis_violating = g.single_atom_law;
        out.rows.push_back(row);
        samples.push_back(std::move(xs));
    }
    out.medians_nondecreasing = true;
    for (std::size_t g = 0; g + 1 < out.rows.size(); ++g) {
        if (!(out.rows[g].median <= out.rows[g + 1].median))
            out.medians_nondecreasing = false;
        out.p_adjacent.push_back(mann_whitney_one_sided(samples[g], samples[g + 1]));
    }
    return out;
}

} // namespace kslab
