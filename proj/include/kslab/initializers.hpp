#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kslab/vec2.hpp"

namespace kslab {

enum class LawKind { GaussianIID, UniformDiskIID, AtomPlusJitter, FileAtoms };

struct Atom {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
};

// Initial plane law for the particle cloud.  Only the fields relevant to
// `kind` are read; atoms carry positive weights that are renormalized at
// sampling time.
struct InitialLaw {
    LawKind kind = LawKind::GaussianIID;
    Vec2 center{0.0, 0.0}; // GaussianIID / UniformDiskIID
    double sigma = 1.0;    // GaussianIID spread
    double radius = 1.0;   // UniformDiskIID
    double jitter = 0.05;  // AtomPlusJitter per-atom spread, must be > 0
    std::vector<Atom> atoms;
    std::string atom_file; // FileAtoms source, parsed by load_atom_file
};

// Coordinate clamp to the box [-bound, bound]^2.
Vec2 clamp_chi(Vec2 p, double bound);

// Parses "weight x y" lines ('#' comments and blank lines allowed) into a
// FileAtoms law.  Throws std::invalid_argument naming the offending line.
InitialLaw load_atom_file(const std::string &path);

// Draws n points i.i.d. from the law, clamps each coordinate to [-n, n],
// and for the atom-backed kinds adds a (1/n)-scale Gaussian perturbation so
// the sample is pairwise distinct.  Every point is derived from (seed, index),
// so the sampled multiset does not depend on evaluation order.  Requires
// n >= 5.  Guarantees no two returned points are bitwise equal (resampling
// loop capped at 100 rounds, then throws std::runtime_error).
std::vector<Vec2> sample_initial(const InitialLaw &law, int n, std::uint64_t seed);

// Redraws duplicate entries via `redraw(index, round)` until all points are
// bitwise distinct; returns the number of rounds used.  Throws
// std::runtime_error once max_rounds is exhausted.
int ensure_pairwise_distinct(std::vector<Vec2> &pts,
                             const std::function<Vec2(int, int)> &redraw,
                             int max_rounds = 100);

// (1/n) Sum |x_i|^6 of a cloud; recorded with run output as a tail-weight
// indicator of the sampled initial condition.
double sixth_moment(const std::vector<Vec2> &pts);

} // namespace kslab
