#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "kslab/diagnostics.hpp"
#include "kslab/dynamics.hpp"
#include "kslab/vec2.hpp"

namespace kslab {

// One Gaussian-windowed Fourier feature phi(x) = A exp(-|x|^2/(2 s^2)) trig(w.x)
// with closed-form derivatives.  A zero wave vector degenerates to the pure
// envelope bump.
struct TestFunction {
    double amp = 1.0;
    Vec2 wave{0.0, 0.0};
    bool odd = false; // sin instead of cos
    double scale = 2.0;

    double value(const Vec2 &x) const;
    Vec2 gradient(const Vec2 &x) const;
    std::array<double, 3> hessian(const Vec2 &x) const; // xx, xy, yy
    double laplacian(const Vec2 &x) const;
    // |phi| + |grad phi| + spectral norm of the Hessian
    double c2_norm_at(const Vec2 &x) const;
};

struct TestFunctionFamily {
    std::vector<TestFunction> terms;
    std::uint64_t content_hash = 0;
};

// Family of C^2-normalized features: term 0 is the envelope, then cos/sin
// pairs over an integer frequency lattice scaled by base_freq.  Each term is
// post-normalized by its measured grid C^2 norm times a 1.05 margin, so the
// unit bound holds with slack at any grid resolution.
inline constexpr int kFamilyTerms = 64;
TestFunctionFamily make_test_family(int n_terms = kFamilyTerms, double envelope_scale = 2.0,
                                    double base_freq = 0.7);

struct EmpiricalMeasure {
    std::vector<Vec2> atoms; // uniform weight 1/|atoms| each
};

EmpiricalMeasure measure_of(const std::vector<Vec2> &points);
double integrate(const TestFunction &phi, const EmpiricalMeasure &mu);

struct WeakDistance {
    double value = 0.0;
    double tail = 0.0; // truncation bound: 2 * 2^-n_terms
};

// delta(mu, nu) = sum_{n=1}^{n_terms} 2^-n |int phi_n dmu - int phi_n dnu|
WeakDistance weak_distance(const EmpiricalMeasure &mu, const EmpiricalMeasure &nu,
                           const TestFunctionFamily &family, int n_terms);

// max over snapshot pairs of delta / (t - s)^exponent
double holder_modulus(const std::vector<std::pair<double, EmpiricalMeasure>> &path,
                      const TestFunctionFamily &family, int n_terms, double exponent = 0.25);

struct C2Function {
    std::function<double(const Vec2 &)> value;
    std::function<Vec2(const Vec2 &)> gradient;
    std::function<double(const Vec2 &)> laplacian;
};

C2Function as_c2(const TestFunction &phi);

struct ResidualSeries {
    Series series;
    double max_spacing = 0.0;
    bool coarse_quadrature = false; // snapshot spacing too wide for the trapezoid
};

// R(t) = int phi dmu_t - int phi dmu_0 - 1/2 int_0^t int lap(phi) dmu_s ds
//        - (theta/2) int_0^t int int K(x-y).(grad phi(x) - grad phi(y)) dmu dmu ds
// with the diagonal contributing zero; requested times snap to the nearest
// recorded snapshot.
ResidualSeries weak_solution_residual(const TrajectoryRecord &record, const C2Function &phi,
                                      const std::vector<double> &times);

struct Diffuseness {
    double near_fraction = 0.0;       // ordered pairs closer than the scale
    double coincident_fraction = 0.0; // ordered pairs at exactly zero distance
};

Diffuseness diffuseness_monitor(const EmpiricalMeasure &mu, double collision_scale);

} // namespace kslab
