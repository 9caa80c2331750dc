#include "rcf/dynamics.hpp"
#include "rcf/lyapunov.hpp"
#include "rcf/random.hpp"
#include "rcf/training.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace rcf;

namespace {

MacroParams stable_params() {
    MacroParams p;
    p.size = 150;
    p.spectral_radius = 0.6;
    p.input_strength = 0.1;
    p.leak = 0.8;
    p.input_bias = 0.5;
    p.seed = 4;
    return p;
}

} // namespace

TEST(Lyapunov, LinearDiagonalFlow) {
    SystemSpec s;
    s.name = "diag";
    s.dim = 2;
    const Vector a{{0.3, -1.2}};
    s.rhs = [a](const Vector& x, double) { return Vector(a.cwiseProduct(x)); };
    s.jacobian = [a](const Vector&) { return Matrix(a.asDiagonal()); };
    const auto le = les_ode(s, 0.01, 5000, {}, Vector{{1.0, 1.0}});
    ASSERT_EQ(le.size(), 2u);
    EXPECT_NEAR(le[0], 0.3, 1e-6);
    EXPECT_NEAR(le[1], -1.2, 1e-6);
}

TEST(Lyapunov, Lorenz63Spectrum) {
    const auto le = les_ode(builtin_system("l63"), 0.01, 100000);
    ASSERT_EQ(le.size(), 3u);
    EXPECT_NEAR(le[0], 0.9, 0.05 * 0.9);
    EXPECT_LT(std::abs(le[1]), 0.02);
    EXPECT_NEAR(le[2], -14.7, 0.05 * 14.7);
}

TEST(Lyapunov, SumRuleAndOrdering) {
    for (const std::string name : {"l63", "rossler", "l96_5d"}) {
        const auto le = les_ode(builtin_system(name), builtin_system(name).default_dt, 40000);
        double sum = 0.0;
        int near_zero = 0;
        for (std::size_t i = 0; i < le.size(); ++i) {
            sum += le[i];
            if (std::abs(le[i]) < 0.02) ++near_zero;
            if (i > 0) {
                EXPECT_LE(le[i], le[i - 1]) << name;
            }
        }
        EXPECT_LE(sum, 0.0) << name;
        EXPECT_EQ(near_zero, 1) << name;
    }
}

TEST(Lyapunov, RenormalizationIntervalInvariance) {
    LyapunovOptions a, b;
    a.renorm_every = 10;
    b.renorm_every = 20;
    const SystemSpec l63 = builtin_system("l63");
    const auto la = les_ode(l63, 0.01, 50000, a);
    const auto lb = les_ode(l63, 0.01, 50000, b);
    EXPECT_NEAR(la[0], lb[0], 0.01 * std::abs(la[0]));
    EXPECT_NEAR(la[2], lb[2], 0.01 * std::abs(la[2]));
    EXPECT_NEAR(la[1], lb[1], 0.02);
}

TEST(Lyapunov, ReorthonormalizationIsOrthonormal) {
    Matrix basis = Matrix::Random(30, 6);
    // For a thin QR, sum log|R_ii| = log sqrt(det(B^T B)).
    const double log_volume = 0.5 * std::log((basis.transpose() * basis).determinant());
    const Vector log_r = reorthonormalize(basis);
    EXPECT_LT((basis.transpose() * basis - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(log_r.sum(), log_volume, 1e-10);
}

TEST(Lyapunov, DrivenJacobianMatchesFiniteDifferences) {
    const Reservoir res = Reservoir::build(stable_params(), 3);
    Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        Vector r(res.size()), u(3);
        for (Index i = 0; i < r.size(); ++i) r[i] = rng.uniform(-0.8, 0.8);
        for (Index i = 0; i < 3; ++i) u[i] = rng.uniform(-10.0, 10.0);
        const Matrix j = driven_jacobian(res, r, u);
        const double leak = res.params().leak, bias = res.params().input_bias;
        Matrix fd(res.size(), res.size());
        for (Index c = 0; c < r.size(); ++c) {
            const double h = 1e-6;
            Vector rp = r, rm = r;
            rp[c] += h;
            rm[c] -= h;
            fd.col(c) = (leaky_tanh_update(res.adjacency(), res.input_map(), rp, u, leak, bias) -
                         leaky_tanh_update(res.adjacency(), res.input_map(), rm, u, leak, bias)) /
                        (2.0 * h);
        }
        EXPECT_LT((fd - j).norm() / j.norm(), 1e-5);
    }
}

TEST(Lyapunov, ContractingAutonomousReservoirHasNegativeExponents) {
    MacroParams p = stable_params();
    p.leak = 1.0;
    p.input_bias = 0.0;
    Reservoir res = Reservoir::build(p, 3);
    res.set_readout_map(Matrix::Zero(3, res.feature_dim()));
    res.set_state(Vector::Constant(p.size, 0.3));
    const auto le = les_autonomous_rc(res, 0.01, 2000, 4);
    for (double l : le) EXPECT_LT(l, 0.0);
}

TEST(Lyapunov, LeadingExponentIndependentOfCount) {
    MacroParams p;
    p.size = 400;
    p.input_strength = 0.084;
    p.leak = 0.6;
    p.spectral_radius = 0.8;
    p.tikhonov = 1e-7;
    p.input_bias = 1.6;
    p.seed = 2;
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries data = integrate(l63, seeded_initial_state(l63, 1), 0.01, 10000, 1000);
    Reservoir res = Reservoir::build(p, 3);
    train_readout(res, data, 100);
    res.spinup(data, data.len());
    const auto one = les_autonomous_rc(res, 0.01, 5000, 1);
    const auto five = les_autonomous_rc(res, 0.01, 5000, 5);
    EXPECT_NEAR(one[0], five[0], 1e-3);
}

TEST(Lyapunov, MemorylessReservoirHitsTheFloor) {
    MacroParams p = stable_params();
    p.leak = 1.0;
    p.size = 20;
    const Reservoir res = Reservoir::from_matrices(p, SparseMatrix(20, 20), Matrix::Ones(20, 3), std::nullopt, false);
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries drive = integrate(l63, seeded_initial_state(l63, 1), 0.01, 500);
    for (double l : cles_driven_rc(res, drive, 3)) EXPECT_EQ(l, kExponentFloor);
}

TEST(Lyapunov, StableReservoirHasNegativeConditionalExponents) {
    const Reservoir res = Reservoir::build(stable_params(), 3);
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries drive = integrate(l63, seeded_initial_state(l63, 1), 0.01, 3000);
    const auto cle = cles_driven_rc(res, drive, 5);
    for (double l : cle) EXPECT_LT(l, 0.0);
}

TEST(Stability, ZeroInputGivesLeakyAdjacencySpectrum) {
    StabilitySettings s;
    s.size = 60;
    s.leak = 1.0;
    const StabilityMap full_leak = stability_map(s, {0.5, 1.0, 1.5}, {0.0}, 3);
    EXPECT_NEAR(full_leak.values(0, 0), 0.5, 1e-9);
    EXPECT_NEAR(full_leak.values(1, 0), 1.0, 1e-9);
    EXPECT_NEAR(full_leak.values(2, 0), 1.5, 1e-9);

    // For alpha < 1 the value is |lambda_max(alpha A + (1 - alpha) I)|.
    s.leak = 0.5;
    const StabilityMap half = stability_map(s, {1.2}, {0.0}, 3);
    MacroParams p;
    p.size = s.size;
    p.density = s.density;
    p.spectral_radius = 1.2;
    p.seed = 3;
    const Reservoir res = Reservoir::build(p, 1);
    const Matrix m = 0.5 * Matrix(res.adjacency()) + 0.5 * Matrix::Identity(s.size, s.size);
    Eigen::EigenSolver<Matrix> es(m, false);
    EXPECT_NEAR(half.values(0, 0), es.eigenvalues().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Stability, MapIsFiniteOrFlagged) {
    StabilitySettings s;
    s.size = 40;
    const StabilityMap map = stability_map(s, {0.5, 1.5}, {0.0, 2.0, 6.0}, 1);
    ASSERT_EQ(map.values.rows(), 2);
    ASSERT_EQ(map.values.cols(), 3);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            EXPECT_TRUE(map.flagged[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ||
                        std::isfinite(map.values(i, j)));
}
