#pragma once
#include <functional>
#include <vector>

#include "kslab/vec2.hpp"

namespace kslab {

// Attraction kernel K(v) = -v/|v|^2 with the exact convention K(0) = 0.
// No regularization: the zero branch is taken only when |v|^2 is exactly
// zero (which also covers denormal underflow of the squared norm).
Vec2 pair_kernel(Vec2 v);

// L(r) = log(1 + 1/r) - 1/(1 + r), positive and strictly decreasing on
// (0, inf).  Evaluated in a cancellation-safe form so the tail (~1/(2r^2))
// keeps relative accuracy at large r.
double l_function(double r);

// L(eta + r): shifted variant used by the damped triple functional.
double l_function_shifted(double r, double eta);

// phi_eta(r) = (r + eta) * log(1 + 1/(eta + r)); its derivative in r is
// l_function_shifted.  Monitor-grade helper.
double damped_log_potential(double r, double eta);

// phi_a(r) = (r + a)^(g/2) / (1 + (r + a)^(g/2)): bounded increasing ramp,
// monitor-grade helper.
double saturating_power(double r, double a, double g);

// A cluster is a sorted, duplicate-free list of 0-based particle indices
// with at least two members.  validate_cluster throws std::invalid_argument
// when those rules (or the bound n) are violated.
using Cluster = std::vector<int>;
void validate_cluster(const Cluster &k, int n);

Vec2 cluster_mean(const std::vector<Vec2> &pts, const Cluster &k);

// Sum over the cluster of squared distances to the cluster mean.  Equals the
// pairwise form (2|K|)^{-1} * sum_{i != j} |x_i - x_j|^2.
double cluster_dispersion(const std::vector<Vec2> &pts, const Cluster &k);

// Scalar profile with a declared monotonicity attribute.  barycentre_gap
// requires both profiles to be nonincreasing and positive on (0, inf); the
// attribute is trusted, not verified.
struct MonotoneFn {
    std::function<double(double)> eval;
    bool nonincreasing = true;
};

struct BarycentreGap {
    double delta;       // [phi(|X|)X + ...] . [psi(|X|)X + ...]
    double lower_bound; // [phi(a)-phi(b)][psi(a)-psi(b)] a^2, a<=b<=c sorted norms
};

// Requires X + Y + Z = 0 (componentwise within 1e-12) and none of the three
// vectors zero; throws std::invalid_argument otherwise.  For nonincreasing
// positive profiles, delta >= lower_bound >= 0 up to roundoff.
BarycentreGap barycentre_gap(const Vec2 &X, const Vec2 &Y, const Vec2 &Z,
                             const MonotoneFn &phi, const MonotoneFn &psi);

// Triple interaction functional on point triples (x, y, z) with edge vectors
// X = x-y, Y = y-z, Z = z-x:
//   all edges nonzero:   (L(|X|^2)X + L(|Y|^2)Y + L(|Z|^2)Z) . (X/|X|^2 + Y/|Y|^2 + Z/|Z|^2)
//   some but not all edges zero: +infinity (sentinel value, saturates averages)
//   all edges zero:      0
double g_functional(const Vec2 &x, const Vec2 &y, const Vec2 &z);

// Damped variant: L replaced by L(eta + .); same edge-degeneracy sentinel
// cases.  Increases toward g_functional as eta decreases to 0.
double g_functional_damped(const Vec2 &x, const Vec2 &y, const Vec2 &z, double eta);

} // namespace kslab
