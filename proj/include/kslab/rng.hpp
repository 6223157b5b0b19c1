#pragma once
#include <cstdint>
#include <random>

namespace kslab {

// splitmix64: cheap avalanche mix used to derive independent stream seeds
// from (master seed, cell index, replica index) style tuples.  Every seed
// consumer in the project goes through derive_seed so that changing one
// replica's index never perturbs another replica's stream.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master ^ 0x51ab5f2c3e1d9b07ULL);
    h = splitmix64(h + a);
    h = splitmix64(h + b);
    return h;
}

// Source of independent standard normal draws.  The simulation step asks for
// draws in a documented order (per particle: x coordinate then y coordinate),
// which lets tests substitute transformed streams (e.g. mirrored noise).
class NormalSource {
  public:
    virtual ~NormalSource() = default;
    virtual double next() = 0;
};

class EngineNormal final : public NormalSource {
  public:
    explicit EngineNormal(std::uint64_t seed) : eng_(seed) {}
    double next() override { return nd_(eng_); }

  private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_{0.0, 1.0};
};

} // namespace kslab
