#include "kslab/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kslab {

void validate(const BesselConfig &cfg) {
    if (!(cfg.dimension >= 0.0)) throw std::invalid_argument("bessel: dimension must be >= 0");
    if (!(cfg.z0 >= 0.0)) throw std::invalid_argument("bessel: z0 must be >= 0");
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("bessel: horizon must be > 0");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("bessel: dt must be > 0");
}

std::vector<double> simulate_bessel(const BesselConfig &cfg, NormalSource &noise) {
    validate(cfg);
    const int steps = static_cast<int>(std::ceil(cfg.horizon / cfg.dt - 1e-12));
    std::vector<double> z;
    z.reserve(steps + 1);
    z.push_back(cfg.z0);
    double cur = cfg.z0;
    bool dead = false;
    for (int k = 0; k < steps; ++k) {
        const double h = (k == steps - 1) ? cfg.horizon - cfg.dt * k : cfg.dt;
        if (!dead) {
            cur += 2.0 * std::sqrt(std::max(cur, 0.0) * h) * noise.next() + cfg.dimension * h;
            if (cur <= 0.0) {
                cur = 0.0;
                if (cfg.absorb_at_zero) dead = true;
            }
        }
        z.push_back(cur);
    }
    return z;
}

std::vector<double> simulate_bessel(const BesselConfig &cfg, std::uint64_t seed) {
    EngineNormal noise(seed);
    return simulate_bessel(cfg, noise);
}

double zero_hitting_fraction(const BesselConfig &cfg, int replicas, std::uint64_t seed) {
    validate(cfg);
    if (replicas < 100) throw std::invalid_argument("zero_hitting_fraction: need replicas >= 100");
    const double threshold = 1e-9;
    int hits = 0;
    for (int r = 0; r < replicas; ++r) {
        EngineNormal noise(derive_seed(seed, static_cast<std::uint64_t>(r)));
        const auto path = simulate_bessel(cfg, noise);
        for (double v : path)
            if (v < threshold) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(replicas);
}

} // namespace kslab
