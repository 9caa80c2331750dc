#pragma once

#include "rcf/dynamics.hpp"
#include "rcf/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace rcf {

/// Reported in place of -infinity when a tangent direction collapses to zero
/// (per unit time).
inline constexpr double kExponentFloor = -1e6;

struct LyapunovOptions {
    Index renorm_every = 10;
    /// Fraction of the renormalizations discarded before averaging starts.
    double discard_fraction = 0.1;
    std::uint64_t seed = 0;   ///< initial tangent basis
};

/// Tangent basis and accumulated growth of a QR (Benettin) iteration.
struct VariationalState {
    Matrix tangent_basis;
    Vector log_r_sums;
    Index steps = 0;          ///< map steps included in log_r_sums
    double dt_effective = 1.0;

    /// Exponents per unit time, descending, floored at kExponentFloor.
    std::vector<double> exponents() const;
};

/// Reorthonormalizes `basis` in place (thin Householder QR) and returns
/// log|R_ii|.
Vector reorthonormalize(Matrix& basis);

/// Spectrum of an ODE system. The tangent is propagated through the same RK4
/// stages as the state, so these are the exponents of the simulated map.
/// Starts from `x0` (or the seeded reference state after a 1000-step
/// transient). Throws NumericalError if the tangent overflows between
/// renormalizations.
std::vector<double> les_ode(const SystemSpec& sys, double dt, Index steps, const LyapunovOptions& opts = {},
                            std::optional<Vector> x0 = std::nullopt);

/// One RK4 step of state and tangent matrix together.
void rk4_tangent_step(const SystemSpec& sys, Vector& x, Matrix& tangent, double dt);

/// Leading `num_exponents` exponents of the autonomous reservoir, iterating
/// the feedback map from the reservoir's current state, per unit model time
/// (divided by `dt`). Throws NumericalError if the forecast diverges.
std::vector<double> les_autonomous_rc(const Reservoir& res, double dt, Index steps, Index num_exponents,
                                      const LyapunovOptions& opts = {});

/// Conditional exponents of the reservoir driven by `drive`, starting from
/// the zero state, per unit time of the drive.
std::vector<double> cles_driven_rc(const Reservoir& res, const TimeSeries& drive, Index num_exponents,
                                   const LyapunovOptions& opts = {});

/// Jacobian of the driven map at state r with input u:
/// alpha * diag(1 - tanh(A r + W_in u + sigma_b)^2) A + (1 - alpha) I.
Matrix driven_jacobian(const Reservoir& res, const Vector& r, const Vector& u);

/// Product of the autonomous-map Jacobian with the columns of `v` at state r
/// (and lagged input u_prev for the biased readout, whose tangent space is
/// [r; u_prev]).
Matrix autonomous_jacobian_product(const Reservoir& res, const Vector& r, const Vector& u_prev, const Matrix& v);

enum class FixedPointMethod {
    /// r* = (I + diag(sech^2 u~) A)^-1 tanh(u~), the small-state approximation.
    linearized,
    /// Newton iteration on r = tanh(A r + u~), started from zero.
    newton,
};

struct StabilitySettings {
    Index size = 200;
    double leak = 0.5;
    double density = 0.9;
    double input_bias = 0.0;
    FixedPointMethod method = FixedPointMethod::linearized;
};

struct StabilityMap {
    StabilitySettings settings;
    std::vector<double> radii;        ///< rows
    std::vector<double> magnitudes;   ///< columns
    Matrix values;                    ///< max |eig| of the Jacobian at r*
    std::vector<std::vector<bool>> flagged;  ///< singular fixed-point system
};

/// For every (rho_SR, |u~|) cell: u~ = |u~| w + sigma_b with w the input
/// column of a one-dimensional reservoir (entries U(-1,1)), the fixed point
/// r*, and the largest eigenvalue magnitude of
/// alpha diag(1 - r*^2) A + (1 - alpha) I. The adjacency pattern is drawn
/// once from `seed` and rescaled per row.
StabilityMap stability_map(const StabilitySettings& settings, const std::vector<double>& radii,
                           const std::vector<double>& magnitudes, std::uint64_t seed, unsigned workers = 1);

/// CSV: spectral_radius, magnitude, value, flagged.
void write_stability_csv(const std::filesystem::path& path, const StabilityMap& map);
/// CSV: index, exponent.
void write_spectrum_csv(const std::filesystem::path& path, const std::vector<double>& exponents);

} // namespace rcf
