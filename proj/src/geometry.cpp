#include "kslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kslab {

Vec2 pair_kernel(Vec2 v) {
    const double n2 = v.norm2();
    if (n2 == 0.0) return {0.0, 0.0}; // exact zero branch, no epsilon
    const double w = -1.0 / n2;
    return {v.x * w, v.y * w};
}

double l_function(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("l_function: r must be > 0");
    // L(r) = -log(1-u) - u with u = 1/(1+r).  The direct form
    // log1p(1/r) - 1/(1+r) cancels catastrophically for large r, so switch
    // to the series sum_{k>=2} u^k/k once u is small.
    const double u = 1.0 / (1.0 + r);
    if (u < 1e-4) {
        const double u2 = u * u;
        return u2 * (1.0 / 2.0 + u * (1.0 / 3.0 + u * (1.0 / 4.0 + u / 5.0)));
    }
    return std::log1p(1.0 / r) - u;
}

double l_function_shifted(double r, double eta) {
    if (!(eta >= 0.0)) throw std::invalid_argument("l_function_shifted: eta must be >= 0");
    return l_function(eta + r);
}

double damped_log_potential(double r, double eta) {
    if (!(r >= 0.0) || !(eta > 0.0))
        throw std::invalid_argument("damped_log_potential: need r >= 0, eta > 0");
    const double s = r + eta;
    return s * std::log1p(1.0 / s);
}

double saturating_power(double r, double a, double g) {
    if (!(r >= 0.0) || !(a > 0.0) || !(g > 0.0))
        throw std::invalid_argument("saturating_power: need r >= 0, a > 0, g > 0");
    const double p = std::pow(r + a, 0.5 * g);
    return p / (1.0 + p);
}

void validate_cluster(const Cluster &k, int n) {
    if (k.size() < 2) throw std::invalid_argument("cluster needs at least 2 indices");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] < 0 || k[i] >= n) throw std::invalid_argument("cluster index out of range");
        if (i > 0 && k[i] <= k[i - 1])
            throw std::invalid_argument("cluster indices must be strictly increasing");
    }
}

Vec2 cluster_mean(const std::vector<Vec2> &pts, const Cluster &k) {
    validate_cluster(k, static_cast<int>(pts.size()));
    Vec2 s;
    for (int i : k) s += pts[i];
    return s * (1.0 / static_cast<double>(k.size()));
}

double cluster_dispersion(const std::vector<Vec2> &pts, const Cluster &k) {
    const Vec2 m = cluster_mean(pts, k);
    double r = 0.0;
    for (int i : k) r += (pts[i] - m).norm2();
    return r;
}

BarycentreGap barycentre_gap(const Vec2 &X, const Vec2 &Y, const Vec2 &Z,
                             const MonotoneFn &phi, const MonotoneFn &psi) {
    const Vec2 s = X + Y + Z;
    if (std::fabs(s.x) > 1e-12 || std::fabs(s.y) > 1e-12)
        throw std::invalid_argument("barycentre_gap: X + Y + Z must vanish");
    const double nx = X.norm(), ny = Y.norm(), nz = Z.norm();
    if (nx == 0.0 || ny == 0.0 || nz == 0.0)
        throw std::invalid_argument("barycentre_gap: zero vector in triple");
    if (!phi.nonincreasing || !psi.nonincreasing)
        throw std::invalid_argument("barycentre_gap: profiles must be declared nonincreasing");

    const Vec2 u = phi.eval(nx) * X + phi.eval(ny) * Y + phi.eval(nz) * Z;
    const Vec2 v = psi.eval(nx) * X + psi.eval(ny) * Y + psi.eval(nz) * Z;

    double a = nx, b = ny, c = nz;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double lb = (phi.eval(a) - phi.eval(b)) * (psi.eval(a) - psi.eval(b)) * a * a;
    return {dot(u, v), lb};
}

namespace {

double g_core(const Vec2 &X, const Vec2 &Y, const Vec2 &Z, double eta) {
    const double x2 = X.norm2(), y2 = Y.norm2(), z2 = Z.norm2();
    const bool zx = (x2 == 0.0), zy = (y2 == 0.0), zz = (z2 == 0.0);
    if (zx && zy && zz) return 0.0;
    if (zx || zy || zz) return std::numeric_limits<double>::infinity();
    const Vec2 u = l_function(eta + x2) * X + l_function(eta + y2) * Y + l_function(eta + z2) * Z;
    const Vec2 v = (1.0 / x2) * X + (1.0 / y2) * Y + (1.0 / z2) * Z;
    return dot(u, v);
}

} // namespace

double g_functional(const Vec2 &x, const Vec2 &y, const Vec2 &z) {
    return g_core(x - y, y - z, z - x, 0.0);
}

double g_functional_damped(const Vec2 &x, const Vec2 &y, const Vec2 &z, double eta) {
    if (!(eta >= 0.0)) throw std::invalid_argument("g_functional_damped: eta must be >= 0");
    return g_core(x - y, y - z, z - x, eta);
}

} // namespace kslab
