#pragma once

#include "rcf/time_series.hpp"
#include "rcf/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rcf {

/// An autonomous ODE benchmark: vector field, analytic Jacobian and the
/// published reference Lyapunov spectrum.
struct SystemSpec {
    std::string name;
    Index dim = 0;
    std::function<Vector(const Vector& x, double t)> rhs;
    std::function<Matrix(const Vector& x)> jacobian;

    /// Published spectrum, descending. Empty when no full spectrum is published.
    std::vector<double> reference_les;
    /// Leading exponent used as the forecast time scale.
    double lambda1 = 1.0;
    /// Integration step used when none is given.
    double default_dt = 0.01;
    /// A point on or near the attractor; generation starts from a seeded
    /// perturbation of it.
    Vector reference_state;

    double tau_lambda() const { return 1.0 / lambda1; }
};

/// Names accepted by builtin_system.
const std::vector<std::string>& builtin_system_names();

/// Throws std::invalid_argument listing the valid names for an unknown one.
SystemSpec builtin_system(std::string_view name);

/// One classical RK4 step of size dt starting at time t.
Vector rk4_step(const SystemSpec& sys, const Vector& x, double t, double dt);

/// Fixed-step RK4 trajectory. The first `transient_discard` steps are dropped;
/// the returned series has exactly `steps` samples, the first being the state
/// after the discarded transient. Throws NumericalError naming the step index
/// if the state stops being finite.
TimeSeries integrate(const SystemSpec& sys, const Vector& x0, double dt, Index steps,
                     Index transient_discard = 1000);

/// The system's reference state plus a uniform perturbation of relative size
/// 1e-3 drawn from `seed`.
Vector seeded_initial_state(const SystemSpec& sys, std::uint64_t seed);

struct TestIc {
    Index index;
    Vector state;
};

/// `count` indices in [lead, len - tail) with pairwise spacing >= min_separation,
/// placed uniformly at random given the seed. Throws std::invalid_argument with
/// the required length when the series is too short.
std::vector<TestIc> sample_test_ics(const TimeSeries& series, Index count, Index min_separation,
                                    std::uint64_t seed, Index lead = 0, Index tail = 0);

} // namespace rcf
