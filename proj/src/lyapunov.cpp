#include "rcf/lyapunov.hpp"

#include "rcf/csv.hpp"
#include "rcf/parallel.hpp"
#include "rcf/random.hpp"
#include "rcf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace rcf {

std::vector<double> VariationalState::exponents() const {
    std::vector<double> out;
    const double time = static_cast<double>(steps) * dt_effective;
    for (Index i = 0; i < log_r_sums.size(); ++i) {
        const double v = time > 0.0 ? log_r_sums[i] / time : 0.0;
        out.push_back(std::isnan(v) || v < kExponentFloor ? kExponentFloor : v);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

Vector reorthonormalize(Matrix& basis) {
    const Index n = basis.rows(), k = basis.cols();
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix& packed = qr.matrixQR();
    Matrix q = qr.householderQ() * Matrix::Identity(n, k);
    Vector logs(k);
    for (Index i = 0; i < k; ++i) {
        const double rii = packed(i, i);
        if (rii < 0.0) q.col(i) = -q.col(i);
        logs[i] = std::log(std::abs(rii));
    }
    basis = std::move(q);
    return logs;
}

namespace {

Matrix initial_basis(Index n, Index k, std::uint64_t seed) {
    // Columns are drawn one after another so the leading columns do not
    // depend on how many exponents are requested.
    Rng rng(seed);
    Matrix basis(n, k);
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n; ++i) basis(i, j) = rng.uniform(-1.0, 1.0);
    reorthonormalize(basis);
    return basis;
}

struct QrSchedule {
    Index renorms = 0;
    Index discard = 0;
};

QrSchedule schedule(Index steps, const LyapunovOptions& opts) {
    if (opts.renorm_every < 1) throw std::invalid_argument("Lyapunov: renorm_every must be >= 1");
    if (!(opts.discard_fraction >= 0.0 && opts.discard_fraction < 1.0))
        throw std::invalid_argument("Lyapunov: discard_fraction must lie in [0, 1)");
    QrSchedule s;
    s.renorms = steps / opts.renorm_every;
    if (s.renorms < 1) throw std::invalid_argument("Lyapunov: steps must be >= renorm_every");
    s.discard = static_cast<Index>(std::floor(opts.discard_fraction * static_cast<double>(s.renorms)));
    if (s.discard >= s.renorms) s.discard = s.renorms - 1;
    return s;
}

/// Runs the QR loop; `advance` moves state and tangent one map step.
VariationalState run_qr(Matrix basis, Index steps, double dt, const LyapunovOptions& opts,
                        const std::function<void(Matrix&, Index)>& advance) {
    const QrSchedule s = schedule(steps, opts);
    VariationalState vs;
    vs.dt_effective = dt;
    vs.log_r_sums = Vector::Zero(basis.cols());
    Index n = 0;
    for (Index block = 0; block < s.renorms; ++block) {
        for (Index j = 0; j < opts.renorm_every; ++j) advance(basis, n++);
        if (!basis.allFinite())
            throw NumericalError("Lyapunov: tangent overflow before step " + std::to_string(n) +
                                 "; use a smaller renorm_every");
        const Vector logs = reorthonormalize(basis);
        if (block >= s.discard) {
            vs.log_r_sums += logs;
            vs.steps += opts.renorm_every;
        }
    }
    vs.tangent_basis = std::move(basis);
    return vs;
}

} // namespace

void rk4_tangent_step(const SystemSpec& sys, Vector& x, Matrix& tangent, double dt) {
    const Vector k1 = sys.rhs(x, 0.0);
    const Matrix t1 = sys.jacobian(x) * tangent;
    const Vector x2 = x + 0.5 * dt * k1;
    const Vector k2 = sys.rhs(x2, 0.0);
    const Matrix t2 = sys.jacobian(x2) * (tangent + 0.5 * dt * t1);
    const Vector x3 = x + 0.5 * dt * k2;
    const Vector k3 = sys.rhs(x3, 0.0);
    const Matrix t3 = sys.jacobian(x3) * (tangent + 0.5 * dt * t2);
    const Vector x4 = x + dt * k3;
    const Vector k4 = sys.rhs(x4, 0.0);
    const Matrix t4 = sys.jacobian(x4) * (tangent + dt * t3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tangent += (dt / 6.0) * (t1 + 2.0 * t2 + 2.0 * t3 + t4);
}

std::vector<double> les_ode(const SystemSpec& sys, double dt, Index steps, const LyapunovOptions& opts,
                            std::optional<Vector> x0) {
    if (!(dt > 0.0)) throw std::invalid_argument("les_ode: dt must be positive");
    Vector x = x0 ? *x0 : integrate(sys, seeded_initial_state(sys, opts.seed), dt, 2, 1000).column(0).eval();
    if (x.size() != sys.dim) throw std::invalid_argument("les_ode: initial state has the wrong dimension");
    const VariationalState vs =
        run_qr(Matrix::Identity(sys.dim, sys.dim), steps, dt, opts, [&](Matrix& basis, Index n) {
            rk4_tangent_step(sys, x, basis, dt);
            if (!x.allFinite()) throw NumericalError("les_ode: state became non-finite at step " + std::to_string(n));
        });
    return vs.exponents();
}

Matrix driven_jacobian(const Reservoir& res, const Vector& r, const Vector& u) {
    Vector pre = res.adjacency() * r + res.input_map() * u;
    pre.array() += res.params().input_bias;
    const Vector t = activation(pre.array()).matrix();
    const double a = res.params().leak;
    Matrix jac = (a * (1.0 - t.array().square())).matrix().asDiagonal() * Matrix(res.adjacency());
    jac.diagonal().array() += 1.0 - a;
    return jac;
}

namespace {

/// Feedback input and its tangent for the autonomous map.
Matrix feedback_tangent(const Reservoir& res, const Vector& r, const Matrix& v) {
    const Matrix& w = res.readout_map();
    const Index n = res.size();
    switch (res.params().readout) {
    case ReadoutKind::linear: return w * v;
    case ReadoutKind::quadratic: return w.leftCols(n) * v + w.rightCols(n) * (2.0 * r).asDiagonal() * v;
    case ReadoutKind::biased: return w.leftCols(n) * v.topRows(n) + w.rightCols(res.input_dim()) * v.bottomRows(res.input_dim());
    }
    return w * v;
}

/// Advances (r, u_prev) one autonomous step and v by the Jacobian at the old state.
void autonomous_step(const Reservoir& res, Vector& r, Vector& u_prev, Matrix& v) {
    const Index n = res.size();
    const Vector fb = res.readout(r, &u_prev);
    Vector pre = res.adjacency() * r + res.input_map() * fb;
    pre.array() += res.params().input_bias;
    const Vector t = activation(pre.array()).matrix();
    const double a = res.params().leak;
    const Vector s = a * (1.0 - t.array().square());

    const Matrix dfb = feedback_tangent(res, r, v);
    const auto vr = v.topRows(n);
    Matrix top = res.adjacency() * vr;
    top.noalias() += res.input_map() * dfb;
    top = s.asDiagonal() * top;
    top += (1.0 - a) * vr;
    if (res.params().readout == ReadoutKind::biased) {
        Matrix next(v.rows(), v.cols());
        next.topRows(n) = top;
        next.bottomRows(res.input_dim()) = dfb;
        v = std::move(next);
    } else {
        v = std::move(top);
    }
    r += a * (t - r);
    u_prev = fb;
}

Index tangent_dim(const Reservoir& res) {
    return res.size() + (res.params().readout == ReadoutKind::biased ? res.input_dim() : 0);
}

} // namespace

Matrix autonomous_jacobian_product(const Reservoir& res, const Vector& r, const Vector& u_prev, const Matrix& v) {
    if (v.rows() != tangent_dim(res)) throw std::invalid_argument("autonomous_jacobian_product: wrong tangent size");
    Vector rr = r, uu = u_prev;
    Matrix out = v;
    autonomous_step(res, rr, uu, out);
    return out;
}

std::vector<double> les_autonomous_rc(const Reservoir& res, double dt, Index steps, Index num_exponents,
                                      const LyapunovOptions& opts) {
    if (res.output_dim() != res.input_dim())
        throw std::invalid_argument("les_autonomous_rc: autonomous mode needs output_dim == input_dim");
    const Index dim = tangent_dim(res);
    if (num_exponents < 1 || num_exponents > dim)
        throw std::invalid_argument("les_autonomous_rc: num_exponents must lie in [1, tangent dimension]");
    Vector r = res.state();
    Vector u_prev = res.last_input();
    const VariationalState vs =
        run_qr(initial_basis(dim, num_exponents, opts.seed), steps, dt, opts, [&](Matrix& basis, Index n) {
            autonomous_step(res, r, u_prev, basis);
            if (!r.allFinite() || !u_prev.allFinite())
                throw NumericalError("les_autonomous_rc: forecast diverged at step " + std::to_string(n));
        });
    return vs.exponents();
}

std::vector<double> cles_driven_rc(const Reservoir& res, const TimeSeries& drive, Index num_exponents,
                                   const LyapunovOptions& opts) {
    if (drive.dim() != res.input_dim()) throw std::invalid_argument("cles_driven_rc: drive dimension mismatch");
    if (num_exponents < 1 || num_exponents > res.size())
        throw std::invalid_argument("cles_driven_rc: num_exponents must lie in [1, N]");
    Vector r = Vector::Zero(res.size());
    const double a = res.params().leak;
    const VariationalState vs = run_qr(
        initial_basis(res.size(), num_exponents, opts.seed), drive.len(), drive.dt(), opts, [&](Matrix& basis, Index n) {
            Vector pre = res.adjacency() * r + res.input_map() * drive.column(n);
            pre.array() += res.params().input_bias;
            const Vector t = activation(pre.array()).matrix();
            Matrix next = (a * (1.0 - t.array().square())).matrix().asDiagonal() * (res.adjacency() * basis);
            next += (1.0 - a) * basis;
            basis = std::move(next);
            r += a * (t - r);
        });
    return vs.exponents();
}

StabilityMap stability_map(const StabilitySettings& settings, const std::vector<double>& radii,
                           const std::vector<double>& magnitudes, std::uint64_t seed, unsigned workers) {
    if (radii.empty() || magnitudes.empty()) throw std::invalid_argument("stability_map: grid must be nonempty");
    MacroParams p;
    p.size = settings.size;
    p.density = settings.density;
    p.leak = settings.leak;
    p.input_bias = settings.input_bias;
    p.input_strength = 1.0;
    p.spectral_radius = 1.0;
    p.seed = seed;
    const Reservoir unit = Reservoir::build(p, 1);
    const Matrix a_unit = Matrix(unit.adjacency());
    const Vector w = unit.input_map().col(0);
    const Index n = settings.size;
    const double alpha = settings.leak;

    StabilityMap map;
    map.settings = settings;
    map.radii = radii;
    map.magnitudes = magnitudes;
    map.values = Matrix::Constant(static_cast<Index>(radii.size()), static_cast<Index>(magnitudes.size()),
                                  std::numeric_limits<double>::quiet_NaN());
    map.flagged.assign(radii.size(), std::vector<bool>(magnitudes.size(), false));

    parallel_for(static_cast<Index>(radii.size()), workers, [&](Index i) {
        const Matrix a = radii[static_cast<std::size_t>(i)] * a_unit;
        for (std::size_t j = 0; j < magnitudes.size(); ++j) {
            const Vector u = (magnitudes[j] * w).array() + settings.input_bias;
            Vector r;
            bool ok = true;
            if (settings.method == FixedPointMethod::linearized) {
                const Vector sech2 = 1.0 - activation(u.array()).square();
                Matrix m = sech2.asDiagonal() * a;
                m.diagonal().array() += 1.0;
                Eigen::FullPivLU<Matrix> lu(m);
                ok = lu.isInvertible() && lu.rcond() > 1e-14;
                if (ok) r = lu.solve(activation(u.array()).matrix());
            } else {
                r = Vector::Zero(n);
                ok = false;
                for (int it = 0; it < 100; ++it) {
                    const Vector t = activation((a * r + u).array()).matrix();
                    const Vector f = r - t;
                    if (f.lpNorm<Eigen::Infinity>() < 1e-12) {
                        ok = true;
                        break;
                    }
                    Matrix jf = (t.array().square() - 1.0).matrix().asDiagonal() * a;
                    jf.diagonal().array() += 1.0;
                    r -= jf.partialPivLu().solve(f);
                    if (!r.allFinite()) break;
                }
            }
            if (!ok || !r.allFinite()) {
                map.flagged[static_cast<std::size_t>(i)][j] = true;
                continue;
            }
            Matrix jac = (alpha * (1.0 - r.array().square())).matrix().asDiagonal() * a;
            jac.diagonal().array() += 1.0 - alpha;
            map.values(i, static_cast<Index>(j)) = spectral_radius_dense(jac);
        }
    });
    return map;
}

void write_stability_csv(const std::filesystem::path& path, const StabilityMap& map) {
    CsvWriter csv(path, {"spectral_radius", "magnitude", "value", "flagged"});
    for (std::size_t i = 0; i < map.radii.size(); ++i)
        for (std::size_t j = 0; j < map.magnitudes.size(); ++j) {
            csv << map.radii[i] << map.magnitudes[j] << map.values(static_cast<Index>(i), static_cast<Index>(j))
                << (map.flagged[i][j] ? 1 : 0);
            csv.end_row();
        }
}

void write_spectrum_csv(const std::filesystem::path& path, const std::vector<double>& exponents) {
    CsvWriter csv(path, {"index", "exponent"});
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        csv << static_cast<Index>(i) << exponents[i];
        csv.end_row();
    }
}

} // namespace rcf
