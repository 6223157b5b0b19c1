#include "kslab/empirical_measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "kslab/geometry.hpp"

namespace kslab {

namespace {

void feed(std::uint64_t &h, const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull; // FNV-1a
    }
}

void feed_double(std::uint64_t &h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    feed(h, &bits, sizeof bits);
}

double spectral_norm_sym(double a, double b, double c) {
    const double m = 0.5 * (a + c);
    const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return std::max(std::abs(m + r), std::abs(m - r));
}

} // namespace

double TestFunction::value(const Vec2 &x) const {
    const double q = x.norm2() / (2.0 * scale * scale);
    const double u = dot(wave, x);
    return amp * std::exp(-q) * (odd ? std::sin(u) : std::cos(u));
}

Vec2 TestFunction::gradient(const Vec2 &x) const {
    const double s2 = scale * scale;
    const double e = std::exp(-x.norm2() / (2.0 * s2));
    const double u = dot(wave, x);
    const double t = odd ? std::sin(u) : std::cos(u);
    const double tp = odd ? std::cos(u) : -std::sin(u);
    return (wave * tp - x * (t / s2)) * (amp * e);
}

std::array<double, 3> TestFunction::hessian(const Vec2 &x) const {
    const double s2 = scale * scale;
    const double e = std::exp(-x.norm2() / (2.0 * s2));
    const double u = dot(wave, x);
    const double t = odd ? std::sin(u) : std::cos(u);
    const double tp = odd ? std::cos(u) : -std::sin(u);
    // t'' = -t for both branches
    const double a = amp * e;
    const double xx = a * (-t * wave.x * wave.x - 2.0 * tp * wave.x * x.x / s2 +
                           t * (x.x * x.x / (s2 * s2) - 1.0 / s2));
    const double yy = a * (-t * wave.y * wave.y - 2.0 * tp * wave.y * x.y / s2 +
                           t * (x.y * x.y / (s2 * s2) - 1.0 / s2));
    const double xy = a * (-t * wave.x * wave.y - tp * (wave.x * x.y + wave.y * x.x) / s2 +
                           t * x.x * x.y / (s2 * s2));
    return {xx, xy, yy};
}

double TestFunction::laplacian(const Vec2 &x) const {
    const auto h = hessian(x);
    return h[0] + h[2];
}

double TestFunction::c2_norm_at(const Vec2 &x) const {
    const auto h = hessian(x);
    return std::abs(value(x)) + gradient(x).norm() + spectral_norm_sym(h[0], h[1], h[2]);
}

TestFunctionFamily make_test_family(int n_terms, double envelope_scale, double base_freq) {
    if (n_terms < 1)
        throw std::invalid_argument("make_test_family: need at least one term");
    if (!(envelope_scale > 0.0) || !(base_freq > 0.0))
        throw std::invalid_argument("make_test_family: scale and frequency must be positive");

    // half-plane frequency lattice, sorted by squared norm then lexicographic
    const int need = (n_terms) / 2 + 1;
    std::vector<std::pair<int, int>> lattice;
    for (int a = 0; a <= 16 && static_cast<int>(lattice.size()) < 4 * need; ++a)
        for (int b = -16; b <= 16; ++b) {
            if (a == 0 && b <= 0)
                continue;
            lattice.push_back({a, b});
        }
    std::sort(lattice.begin(), lattice.end(), [](const auto &l, const auto &r) {
        const long long ln = static_cast<long long>(l.first) * l.first +
                             static_cast<long long>(l.second) * l.second;
        const long long rn = static_cast<long long>(r.first) * r.first +
                             static_cast<long long>(r.second) * r.second;
        if (ln != rn)
            return ln < rn;
        return l < r;
    });
    if (static_cast<int>(lattice.size()) < need)
        throw std::invalid_argument("make_test_family: too many terms for the frequency lattice");

    TestFunctionFamily fam;
    fam.terms.reserve(static_cast<std::size_t>(n_terms));
    for (int i = 0; i < n_terms; ++i) {
        TestFunction f;
        f.scale = envelope_scale;
        f.amp = 1.0;
        if (i == 0) {
            f.wave = {0.0, 0.0};
            f.odd = false;
        } else {
            const auto &p = lattice[static_cast<std::size_t>((i - 1) / 2)];
            f.wave = {base_freq * p.first, base_freq * p.second};
            f.odd = ((i - 1) % 2) == 1;
        }
        // measured grid C^2 norm with a 1.05 safety margin; the sup point of
        // each smooth factor sits well inside 4 envelope scales
        const double extent = 4.0 * envelope_scale;
        const int grid = 401;
        double sup = 0.0;
        for (int gx = 0; gx < grid; ++gx)
            for (int gy = 0; gy < grid; ++gy) {
                const Vec2 x{-extent + 2.0 * extent * gx / (grid - 1),
                             -extent + 2.0 * extent * gy / (grid - 1)};
                sup = std::max(sup, f.c2_norm_at(x));
            }
        f.amp = 1.0 / (1.05 * sup);
        fam.terms.push_back(f);
    }

    std::uint64_t h = 1469598103934665603ull;
    feed(h, &n_terms, sizeof n_terms);
    feed_double(h, envelope_scale);
    feed_double(h, base_freq);
    for (const auto &f : fam.terms) {
        feed_double(h, f.amp);
        feed_double(h, f.wave.x);
        feed_double(h, f.wave.y);
        const int o = f.odd ? 1 : 0;
        feed(h, &o, sizeof o);
    }
    fam.content_hash = h;
    return fam;
}

EmpiricalMeasure measure_of(const std::vector<Vec2> &points) {
    if (points.empty())
        throw std::invalid_argument("measure_of: empty atom list");
    return EmpiricalMeasure{points};
}

double integrate(const TestFunction &phi, const EmpiricalMeasure &mu) {
    if (mu.atoms.empty())
        throw std::invalid_argument("integrate: empty measure");
    double s = 0.0;
    for (const auto &x : mu.atoms)
        s += phi.value(x);
    return s / static_cast<double>(mu.atoms.size());
}

WeakDistance weak_distance(const EmpiricalMeasure &mu, const EmpiricalMeasure &nu,
                           const TestFunctionFamily &family, int n_terms) {
    if (n_terms < 1)
        throw std::invalid_argument("weak_distance: n_terms must be at least 1");
    if (n_terms > static_cast<int>(family.terms.size()))
        throw std::invalid_argument("weak_distance: family has too few terms");
    WeakDistance out;
    double w = 1.0;
    for (int n = 0; n < n_terms; ++n) {
        w *= 0.5;
        out.value += w * std::abs(integrate(family.terms[static_cast<std::size_t>(n)], mu) -
                                  integrate(family.terms[static_cast<std::size_t>(n)], nu));
    }
    out.tail = 2.0 * std::pow(2.0, -n_terms);
    return out;
}

double holder_modulus(const std::vector<std::pair<double, EmpiricalMeasure>> &path,
                      const TestFunctionFamily &family, int n_terms, double exponent) {
    if (path.size() < 2)
        throw std::invalid_argument("holder_modulus: need at least two snapshots");
    if (n_terms < 1 || n_terms > static_cast<int>(family.terms.size()))
        throw std::invalid_argument("holder_modulus: bad n_terms");
    if (!(exponent > 0.0))
        throw std::invalid_argument("holder_modulus: exponent must be positive");
    // precompute the feature integrals per snapshot
    const std::size_t m = path.size();
    std::vector<std::vector<double>> feat(m, std::vector<double>(static_cast<std::size_t>(n_terms)));
    for (std::size_t s = 0; s < m; ++s)
        for (int n = 0; n < n_terms; ++n)
            feat[s][static_cast<std::size_t>(n)] =
                integrate(family.terms[static_cast<std::size_t>(n)], path[s].second);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double dt = path[j].first - path[i].first;
            if (!(dt > 0.0))
                continue;
            double delta = 0.0, w = 1.0;
            for (int n = 0; n < n_terms; ++n) {
                w *= 0.5;
                delta += w * std::abs(feat[j][static_cast<std::size_t>(n)] -
                                      feat[i][static_cast<std::size_t>(n)]);
            }
            worst = std::max(worst, delta / std::pow(dt, exponent));
        }
    return worst;
}

C2Function as_c2(const TestFunction &phi) {
    C2Function f;
    f.value = [phi](const Vec2 &x) { return phi.value(x); };
    f.gradient = [phi](const Vec2 &x) { return phi.gradient(x); };
    f.laplacian = [phi](const Vec2 &x) { return phi.laplacian(x); };
    return f;
}

ResidualSeries weak_solution_residual(const TrajectoryRecord &record, const C2Function &phi,
                                      const std::vector<double> &times) {
    if (record.snapshots.empty())
        throw std::invalid_argument("weak_solution_residual: record has no snapshots");
    const std::size_t m = record.snapshots.size();
    const double n = static_cast<double>(record.n);

    // per-snapshot mean value and drift integrand
    std::vector<double> mean_phi(m), integrand(m);
    for (std::size_t s = 0; s < m; ++s) {
        const auto &pts = record.snapshots[s].positions;
        double mv = 0.0, lap = 0.0;
        std::vector<Vec2> grads(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            mv += phi.value(pts[i]);
            lap += phi.laplacian(pts[i]);
            grads[i] = phi.gradient(pts[i]);
        }
        double pair = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                pair += dot(pair_kernel(pts[i] - pts[j]), grads[i] - grads[j]);
        mean_phi[s] = mv / n;
        integrand[s] = 0.5 * lap / n + record.theta * pair / (n * n);
    }

    // cumulative trapezoid of the integrand on the snapshot grid
    std::vector<double> cum(m, 0.0);
    double max_gap = 0.0;
    for (std::size_t s = 1; s < m; ++s) {
        const double gap = record.snapshots[s].t - record.snapshots[s - 1].t;
        max_gap = std::max(max_gap, gap);
        cum[s] = cum[s - 1] + 0.5 * (integrand[s] + integrand[s - 1]) * gap;
    }

    ResidualSeries out;
    out.max_spacing = max_gap;
    out.coarse_quadrature = max_gap > 0.1;
    for (double t : times) {
        // nearest snapshot
        std::size_t best = 0;
        double dist = std::abs(record.snapshots[0].t - t);
        for (std::size_t s = 1; s < m; ++s) {
            const double d = std::abs(record.snapshots[s].t - t);
            if (d < dist) {
                dist = d;
                best = s;
            }
        }
        out.series.t.push_back(record.snapshots[best].t);
        out.series.v.push_back(mean_phi[best] - mean_phi[0] - cum[best]);
    }
    return out;
}

Diffuseness diffuseness_monitor(const EmpiricalMeasure &mu, double collision_scale) {
    if (!(collision_scale > 0.0))
        throw std::invalid_argument("diffuseness_monitor: collision scale must be positive");
    if (mu.atoms.empty())
        throw std::invalid_argument("diffuseness_monitor: empty measure");
    const std::size_t n = mu.atoms.size();
    if (n == 1)
        return {};
    const double s2 = collision_scale * collision_scale;
    long long near = 0, same = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = (mu.atoms[i] - mu.atoms[j]).norm2();
            if (d2 < s2)
                ++near;
            if (d2 == 0.0)
                ++same;
        }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return {static_cast<double>(near) / pairs, static_cast<double>(same) / pairs};
}

} // namespace kslab
