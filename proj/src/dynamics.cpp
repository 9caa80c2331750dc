#include "rcf/dynamics.hpp"

#include "rcf/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rcf {
namespace {

SystemSpec lorenz63() {
    constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
    SystemSpec s;
    s.name = "l63";
    s.dim = 3;
    s.rhs = [=](const Vector& x, double) {
        Vector dx(3);
        dx << sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2];
        return dx;
    };
    s.jacobian = [=](const Vector& x) {
        Matrix j(3, 3);
        j << -sigma, sigma, 0.0,
             rho - x[2], -1.0, -x[0],
             x[1], x[0], -beta;
        return j;
    };
    s.reference_les = {0.9, 0.0, -14.7};
    s.lambda1 = 0.9;
    s.default_dt = 0.01;
    s.reference_state = Vector{{-8.0, -7.0, 27.0}};
    return s;
}

SystemSpec rossler() {
    constexpr double a = 0.2, b = 0.2, c = 5.7;
    SystemSpec s;
    s.name = "rossler";
    s.dim = 3;
    s.rhs = [=](const Vector& x, double) {
        Vector dx(3);
        dx << -(x[1] + x[2]), x[0] + a * x[1], b + x[2] * (x[0] - c);
        return dx;
    };
    s.jacobian = [=](const Vector& x) {
        Matrix j(3, 3);
        j << 0.0, -1.0, -1.0,
             1.0, a, 0.0,
             x[2], 0.0, x[0] - c;
        return j;
    };
    s.reference_les = {0.06, 0.0, -4.9};
    s.lambda1 = 0.065;
    s.default_dt = 0.05;
    s.reference_state = Vector{{1.0, -5.0, 0.05}};
    return s;
}

SystemSpec colpitts() {
    constexpr double alpha = 5.0, gamma = 0.0797, q = 0.6898, eta = 6.2723;
    SystemSpec s;
    s.name = "colpitts";
    s.dim = 3;
    s.rhs = [=](const Vector& x, double) {
        Vector dx(3);
        dx << alpha * x[1], -gamma * (x[0] + x[2]) - q * x[1], eta * (x[1] + 1.0 - std::exp(-x[0]));
        return dx;
    };
    s.jacobian = [=](const Vector& x) {
        Matrix j(3, 3);
        j << 0.0, alpha, 0.0,
             -gamma, -q, -gamma,
             eta * std::exp(-x[0]), eta, 0.0;
        return j;
    };
    s.reference_les = {0.09, 0.0, -0.8};
    s.lambda1 = 0.07;
    s.default_dt = 0.05;
    s.reference_state = Vector{{0.5, 0.1, 0.1}};
    return s;
}

SystemSpec lorenz96(Index dim, std::vector<double> les, double lambda1) {
    constexpr double forcing = 8.0;
    SystemSpec s;
    s.name = "l96_" + std::to_string(dim) + "d";
    s.dim = dim;
    // x_{-1} = x_{D-1}, x_0 = x_D, x_{D+1} = x_1 in one-based notation.
    s.rhs = [dim](const Vector& x, double) {
        Vector dx(dim);
        for (Index i = 0; i < dim; ++i) {
            const Index im1 = (i + dim - 1) % dim;
            const Index im2 = (i + dim - 2) % dim;
            const Index ip1 = (i + 1) % dim;
            dx[i] = x[im1] * (x[ip1] - x[im2]) - x[i] + forcing;
        }
        return dx;
    };
    s.jacobian = [dim](const Vector& x) {
        Matrix j = Matrix::Zero(dim, dim);
        for (Index i = 0; i < dim; ++i) {
            const Index im1 = (i + dim - 1) % dim;
            const Index im2 = (i + dim - 2) % dim;
            const Index ip1 = (i + 1) % dim;
            j(i, im1) += x[ip1] - x[im2];
            j(i, ip1) += x[im1];
            j(i, im2) -= x[im1];
            j(i, i) -= 1.0;
        }
        return j;
    };
    s.reference_les = std::move(les);
    s.lambda1 = lambda1;
    s.default_dt = 0.01;
    s.reference_state = Vector::Constant(dim, forcing);
    s.reference_state[0] += 0.5;
    return s;
}

SystemSpec climate_lorenz63() {
    constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0, S = 1.0, k1 = 10.0, k2 = -11.0,
                     tau = 0.1, kappa = 1.0, kappa_e = 0.08, kappa_z = 1.0;
    SystemSpec s;
    s.name = "cl63";
    s.dim = 9;
    // State order: extratropical (xe, ye, ze), tropical (xt, yt, zt), ocean (xo, yo, zo).
    s.rhs = [=](const Vector& v, double) {
        const double xe = v[0], ye = v[1], ze = v[2];
        const double xt = v[3], yt = v[4], zt = v[5];
        const double xo = v[6], yo = v[7], zo = v[8];
        Vector dx(9);
        dx[0] = sigma * (ye - xe) - kappa_e * (S * xt + k1);
        dx[1] = rho * xe - ye - xe * ze + kappa_e * (S * yt + k1);
        dx[2] = xe * ye - beta * ze;
        dx[3] = sigma * (yt - xt) - kappa * (S * xo + k2) - kappa_e * (S * xe + k1);
        dx[4] = rho * xt - yt - xt * zt + kappa * (S * yo + k2) + kappa_e * (S * ye + k1);
        dx[5] = xt * yt - beta * zt + kappa_z * zo;
        dx[6] = tau * sigma * (yo - xo) - kappa * (xt + k2);
        dx[7] = tau * rho * xo - tau * yo - tau * S * xo * zo + kappa * (yt + k2);
        dx[8] = tau * S * xo * yo - tau * beta * zo - kappa_z * zt;
        return dx;
    };
    s.jacobian = [=](const Vector& v) {
        const double xe = v[0], ye = v[1], ze = v[2];
        const double xt = v[3], yt = v[4], zt = v[5];
        const double xo = v[6], yo = v[7], zo = v[8];
        Matrix j = Matrix::Zero(9, 9);
        j(0, 0) = -sigma; j(0, 1) = sigma; j(0, 3) = -kappa_e * S;
        j(1, 0) = rho - ze; j(1, 1) = -1.0; j(1, 2) = -xe; j(1, 4) = kappa_e * S;
        j(2, 0) = ye; j(2, 1) = xe; j(2, 2) = -beta;
        j(3, 0) = -kappa_e * S; j(3, 3) = -sigma; j(3, 4) = sigma; j(3, 6) = -kappa * S;
        j(4, 1) = kappa_e * S; j(4, 3) = rho - zt; j(4, 4) = -1.0; j(4, 5) = -xt; j(4, 7) = kappa * S;
        j(5, 3) = yt; j(5, 4) = xt; j(5, 5) = -beta; j(5, 8) = kappa_z;
        j(6, 3) = -kappa; j(6, 6) = -tau * sigma; j(6, 7) = tau * sigma;
        j(7, 4) = kappa; j(7, 6) = tau * rho - tau * S * zo; j(7, 7) = -tau; j(7, 8) = -tau * S * xo;
        j(8, 5) = -kappa_z; j(8, 6) = tau * S * yo; j(8, 7) = tau * S * xo; j(8, 8) = -tau * beta;
        return j;
    };
    s.reference_les = {0.9, 0.4, 0.0, -0.1, -0.6, -0.8, -1.6, -11.7, -14.0};
    s.lambda1 = 0.9;
    s.default_dt = 0.01;
    s.reference_state = Vector{{1.0, 2.0, 20.0, 1.0, 2.0, 20.0, 1.0, 2.0, 10.0}};
    return s;
}

// Chaotic water wheel in physical units: omega [1/s], center of mass y, z [m].
SystemSpec malkus() {
    constexpr double R = 1.0, a = 1.0, f = 0.4, leak = 0.1;
    SystemSpec s;
    s.name = "malkus";
    s.dim = 3;
    s.rhs = [=](const Vector& x, double) {
        Vector dx(3);
        dx << a * x[1] - f * x[0], x[0] * x[2] - leak * x[1], -x[0] * x[1] + leak * (R - x[2]);
        return dx;
    };
    s.jacobian = [=](const Vector& x) {
        Matrix j(3, 3);
        j << -f, a, 0.0,
             x[2], -leak, x[0],
             -x[1], -x[0], -leak;
        return j;
    };
    s.lambda1 = 0.053;
    s.default_dt = 0.05;
    s.reference_state = Vector{{0.1, 0.05, 0.5}};
    return s;
}

} // namespace

const std::vector<std::string>& builtin_system_names() {
    static const std::vector<std::string> names = {"rossler", "colpitts", "l63",  "l96_5d",
                                                   "l96_10d", "l96_40d",  "cl63", "malkus"};
    return names;
}

SystemSpec builtin_system(std::string_view name) {
    if (name == "l63") return lorenz63();
    if (name == "rossler") return rossler();
    if (name == "colpitts") return colpitts();
    if (name == "l96_5d") return lorenz96(5, {0.4, 0.0, -0.5, -1.3, -3.5}, 0.4);
    if (name == "l96_10d")
        return lorenz96(10, {1.1, 0.7, 0.1, 0.0, -0.4, -0.8, -1.3, -1.9, -2.7, -4.5}, 1.1);
    if (name == "l96_40d") return lorenz96(40, {}, 1.68);
    if (name == "cl63") return climate_lorenz63();
    if (name == "malkus") return malkus();

    std::ostringstream msg;
    msg << "unknown system '" << name << "'; valid names:";
    for (const auto& n : builtin_system_names()) msg << ' ' << n;
    throw std::invalid_argument(msg.str());
}

Vector rk4_step(const SystemSpec& sys, const Vector& x, double t, double dt) {
    const Vector k1 = sys.rhs(x, t);
    const Vector k2 = sys.rhs(x + 0.5 * dt * k1, t + 0.5 * dt);
    const Vector k3 = sys.rhs(x + 0.5 * dt * k2, t + 0.5 * dt);
    const Vector k4 = sys.rhs(x + dt * k3, t + dt);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TimeSeries integrate(const SystemSpec& sys, const Vector& x0, double dt, Index steps,
                     Index transient_discard) {
    if (x0.size() != sys.dim)
        throw std::invalid_argument("integrate: initial state has dimension " +
                                    std::to_string(x0.size()) + ", system " + sys.name +
                                    " needs " + std::to_string(sys.dim));
    if (!x0.allFinite()) throw std::invalid_argument("integrate: initial state is not finite");
    if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (steps < 2) throw std::invalid_argument("integrate: need at least 2 steps");
    if (transient_discard < 0) throw std::invalid_argument("integrate: negative transient");

    Vector x = x0;
    double t = 0.0;
    Index step = 0;
    auto advance = [&] {
        x = rk4_step(sys, x, t, dt);
        ++step;
        t = static_cast<double>(step) * dt;
        if (!x.allFinite())
            throw NumericalError("integrate: state of " + sys.name +
                                 " became non-finite at step " + std::to_string(step) +
                                 " (dt = " + std::to_string(dt) + " may be too large)");
    };

    for (Index i = 0; i < transient_discard; ++i) advance();
    Matrix out(sys.dim, steps);
    out.col(0) = x;
    for (Index i = 1; i < steps; ++i) {
        advance();
        out.col(i) = x;
    }
    return TimeSeries(std::move(out), dt);
}

Vector seeded_initial_state(const SystemSpec& sys, std::uint64_t seed) {
    Rng rng(seed);
    Vector x = sys.reference_state;
    for (Index i = 0; i < x.size(); ++i) x[i] += 1e-3 * (std::abs(x[i]) + 1.0) * rng.uniform(-1.0, 1.0);
    return x;
}

std::vector<TestIc> sample_test_ics(const TimeSeries& series, Index count, Index min_separation,
                                    std::uint64_t seed, Index lead, Index tail) {
    if (count < 1) throw std::invalid_argument("sample_test_ics: count must be positive");
    if (min_separation < 1)
        throw std::invalid_argument("sample_test_ics: min_separation must be positive");
    if (lead < 0 || tail < 0) throw std::invalid_argument("sample_test_ics: negative margin");

    const Index required = lead + tail + (count - 1) * min_separation + 1;
    if (series.len() < required)
        throw std::invalid_argument("sample_test_ics: series of length " +
                                    std::to_string(series.len()) + " is too short; " +
                                    std::to_string(count) + " ICs with separation " +
                                    std::to_string(min_separation) + " need length >= " +
                                    std::to_string(required));

    // Spread the slack at random: sorted offsets in [0, slack] plus fixed spacing.
    const Index slack = series.len() - required;
    Rng rng(seed);
    std::vector<Index> offsets(static_cast<std::size_t>(count));
    for (auto& o : offsets) o = static_cast<Index>(rng.below(static_cast<std::uint64_t>(slack) + 1));
    std::sort(offsets.begin(), offsets.end());

    std::vector<TestIc> ics;
    ics.reserve(offsets.size());
    for (Index i = 0; i < count; ++i) {
        const Index idx = lead + offsets[static_cast<std::size_t>(i)] + i * min_separation;
        ics.push_back({idx, series.column(idx)});
    }
    return ics;
}

} // namespace rcf
