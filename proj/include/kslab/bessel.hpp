#pragma once

#include <cstdint>
#include <vector>

#include "kslab/rng.hpp"

namespace kslab {

// Squared Bessel process of arbitrary real dimension d >= 0:
//   dZ = 2 sqrt(Z^+) dW + d dt
// Euler scheme on a fixed grid. Negative excursions are put back to 0
// (reflecting behaviour at the boundary), or frozen there when
// absorb_at_zero is set.
struct BesselConfig {
    double dimension = 0.0; // >= 0
    double z0 = 0.0;        // >= 0
    double horizon = 1.0;   // > 0
    double dt = 1e-3;       // > 0
    bool absorb_at_zero = false;
};

void validate(const BesselConfig &cfg);

// Series of Z values on the grid 0, dt, 2dt, ..., horizon (the last step is
// shortened when horizon is not a multiple of dt). Front element is z0.
std::vector<double> simulate_bessel(const BesselConfig &cfg, NormalSource &noise);
std::vector<double> simulate_bessel(const BesselConfig &cfg, std::uint64_t seed);

// Fraction of independent replicas whose path dips below 1e-9 before the
// horizon. Deterministic in (cfg, replicas, seed).
double zero_hitting_fraction(const BesselConfig &cfg, int replicas, std::uint64_t seed);

} // namespace kslab
