#include "rcf/dynamics.hpp"
#include "rcf/reservoir.hpp"
#include "rcf/spectral.hpp"
#include "rcf/training.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace rcf;

namespace {

MacroParams small_params(std::uint64_t seed = 1) {
    MacroParams p;
    p.size = 200;
    p.density = 0.02;
    p.spectral_radius = 0.8;
    p.input_strength = 0.5;
    p.leak = 0.7;
    p.input_bias = 0.3;
    p.seed = seed;
    return p;
}

double dense_spectral_radius(const SparseMatrix& a) {
    Eigen::EigenSolver<Matrix> solver(Matrix(a), false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SparseMatrix sparse_from(const Matrix& m) { return m.sparseView(); }

} // namespace

TEST(Reservoir, SpectralRadiusContractOverTwentySeeds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Reservoir res = Reservoir::build(small_params(seed), 3);
        EXPECT_NEAR(dense_spectral_radius(res.adjacency()), 0.8, 1e-6) << "seed " << seed;
    }
}

TEST(Reservoir, ScalingForcesTheLargestEigenvalue) {
    const SparseMatrix a = scale_to_spectral_radius(sparse_from(Matrix{{2.0, 0.0}, {0.0, 1.0}}), 0.5);
    EXPECT_NEAR(a.coeff(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(a.coeff(1, 1), 0.25, 1e-12);
    EXPECT_EQ(a.coeff(0, 1), 0.0);
}

TEST(Reservoir, DegenerateAdjacencyAdvisesDensity) {
    MacroParams p = small_params();
    p.size = 20;
    p.density = 1e-4;
    try {
        Reservoir::build(p, 2);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("density"), std::string::npos);
    }
}

TEST(Reservoir, ConstructionIsDeterministic) {
    const Reservoir a = Reservoir::build(small_params(5), 3);
    const Reservoir b = Reservoir::build(small_params(5), 3);
    EXPECT_TRUE(Matrix(a.adjacency()) == Matrix(b.adjacency()));
    EXPECT_EQ(a.input_map(), b.input_map());
    const Reservoir c = Reservoir::build(small_params(6), 3);
    EXPECT_FALSE(Matrix(a.adjacency()) == Matrix(c.adjacency()));
}

TEST(Reservoir, InputMapWithinStrength) {
    const Reservoir res = Reservoir::build(small_params(), 4);
    EXPECT_LE(res.input_map().cwiseAbs().maxCoeff(), 0.5);
    EXPECT_GT(res.input_map().cwiseAbs().maxCoeff(), 0.4);
}

TEST(Reservoir, DensityIsApproximatelyRespected) {
    MacroParams p = small_params();
    p.size = 1000;
    const Reservoir res = Reservoir::build(p, 3);
    const double density = static_cast<double>(res.adjacency().nonZeros()) / 1e6;
    EXPECT_NEAR(density, 0.02, 0.002);
}

TEST(Reservoir, SingleStepExample) {
    MacroParams p;
    p.size = 1;
    p.leak = 1.0;
    p.input_bias = 0.0;
    Reservoir res = Reservoir::from_matrices(p, SparseMatrix(1, 1), Matrix::Identity(1, 1), std::nullopt, false);
    res.drive_step(Vector::Constant(1, 0.5));
    EXPECT_NEAR(res.state()[0], std::tanh(0.5), 1e-15);
    EXPECT_NEAR(res.state()[0], 0.4621, 1e-4);
}

TEST(Reservoir, ZeroLeakKeepsTheState) {
    MacroParams p = small_params();
    p.leak = 1.0;
    Reservoir res = Reservoir::build(p, 3);
    res.drive_step(Vector{{0.1, 0.2, 0.3}});
    const Vector r = res.state();
    // Reuse the matrices with alpha = 0.
    const Vector next = leaky_tanh_update(res.adjacency(), res.input_map(), r, Vector{{5.0, -2.0, 1.0}}, 0.0, 0.3);
    EXPECT_EQ(next, r);
}

TEST(Reservoir, MapEqualsEulerStepOfDifferentialForm) {
    // dr/dt = gamma (-r + tanh(A r + W u + b)) with alpha = gamma dt.
    const double gamma = 5.0, dt = 0.1;
    MacroParams p = small_params();
    p.leak = gamma * dt;
    Reservoir res = Reservoir::build(p, 3);
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries u = integrate(l63, seeded_initial_state(l63, 2), 0.01, 1000, 100);
    Vector r = Vector::Zero(p.size);
    for (Index t = 0; t < u.len(); ++t) {
        Vector pre = res.adjacency() * r;
        pre.noalias() += res.input_map() * u.column(t);
        pre.array() += p.input_bias;
        const Vector drift = activation(pre.array()).matrix() - r;
        r = r + (gamma * dt) * drift;
        res.drive_step(u.column(t));
        ASSERT_EQ(res.state(), r) << "step " << t;
    }
}

TEST(Reservoir, StateStaysBounded) {
    MacroParams p = small_params();
    p.spectral_radius = 1.8;
    p.input_strength = 3.0;
    Reservoir res = Reservoir::build(p, 3);
    Vector r0 = Vector::LinSpaced(p.size, -3.0, 3.0);
    res.set_state(r0);
    const Vector bound = r0.cwiseAbs().cwiseMax(1.0);
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries u = integrate(l63, seeded_initial_state(l63, 2), 0.01, 500, 100);
    for (Index t = 0; t < u.len(); ++t) {
        res.drive_step(u.column(t));
        ASSERT_TRUE((res.state().cwiseAbs().array() <= bound.array()).all()) << "step " << t;
    }
}

TEST(Reservoir, ReadoutExamples) {
    const Vector r{{1.0, -1.0}};
    EXPECT_EQ(readout_features(ReadoutKind::quadratic, r, Vector()), (Vector{{1.0, -1.0, 1.0, 1.0}}));
    EXPECT_EQ(feature_dim(ReadoutKind::biased, 10, 3), 13);
    EXPECT_EQ(feature_dim(ReadoutKind::quadratic, 10, 3), 20);

    MacroParams p;
    p.size = 4;
    Reservoir lin = Reservoir::from_matrices(p, SparseMatrix(4, 4), Matrix::Ones(4, 2), std::nullopt, false);
    lin.set_readout_map(Matrix::Identity(2, 4));
    const Vector state{{0.1, 0.2, 0.3, 0.4}};
    EXPECT_EQ(lin.readout(state), (Vector{{0.1, 0.2}}));

    p.readout = ReadoutKind::biased;
    Reservoir biased = Reservoir::from_matrices(p, SparseMatrix(4, 4), Matrix::Ones(4, 2), std::nullopt, false);
    Matrix w = Matrix::Zero(2, 6);
    w.rightCols(2) = Matrix{{2.0, 0.0}, {1.0, 3.0}};
    biased.set_readout_map(w);
    const Vector u_prev{{1.0, -1.0}};
    EXPECT_EQ(biased.readout(Vector::Zero(4), &u_prev), (Vector{{2.0, -2.0}}));
    EXPECT_THROW(biased.readout(Vector::Zero(4)), std::invalid_argument);
}

TEST(Reservoir, ForecastNeedsTrainedReadout) {
    Reservoir res = Reservoir::build(small_params(), 3);
    EXPECT_THROW(res.forecast_step(), std::logic_error);
}

TEST(Reservoir, ForecastStepIsDriveStepWithThePrediction) {
    Reservoir res = Reservoir::build(small_params(), 3);
    res.set_readout_map(Matrix::Random(3, res.feature_dim()));
    res.set_state(Vector::Constant(200, 0.1));
    Reservoir driven = res;
    for (int k = 0; k < 20; ++k) {
        const Vector state = res.forecast_step().first;
        driven.drive_step(driven.predict());
        ASSERT_EQ(state, driven.state()) << "step " << k;
    }
}

TEST(Reservoir, LearnsALinearDecay) {
    // u(t + 1) = 0.9 u(t): the forecast should decay at the same rate.
    Matrix v(1, 300);
    v(0, 0) = 2.0;
    for (Index t = 1; t < v.cols(); ++t) v(0, t) = 0.9 * v(0, t - 1);
    MacroParams p = small_params();
    p.spectral_radius = 0.5;
    p.input_bias = 0.0;
    p.leak = 1.0;
    p.tikhonov = 1e-14;
    Reservoir res = Reservoir::build(p, 1);
    const TimeSeries series(v, 1.0);
    train_readout(res, series, 10);
    res.spinup(series, 20);
    const Matrix f = res.forecast(51);
    const double rate = std::pow(f(0, 50) / f(0, 0), 1.0 / 50.0);
    EXPECT_NEAR(rate, 0.9, 0.01);
}

TEST(Reservoir, Lorenz63ForecastStaysNearTheAttractor) {
    MacroParams p;
    p.size = 2000;
    p.input_strength = 0.084;
    p.leak = 0.6;
    p.spectral_radius = 0.8;
    p.tikhonov = 8.493901e-08;
    p.input_bias = 1.6;
    p.seed = 1;
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries data = integrate(l63, seeded_initial_state(l63, 1), 0.01, 20000, 1000);
    Reservoir res = Reservoir::build(p, 3);
    train_readout(res, data, 100);

    // One-step error on the training data.
    res.reset();
    double sq = 0.0;
    Index count = 0;
    for (Index t = 0; t < data.len(); ++t) {
        if (t >= 100) {
            sq += ((res.predict() - data.column(t)).cwiseQuotient(data.stddev())).squaredNorm() / 3.0;
            ++count;
        }
        res.drive_step(data.column(t));
    }
    EXPECT_LT(std::sqrt(sq / static_cast<double>(count)), 1e-2);

    const Matrix f = res.forecast(500);
    const Vector lo = data.values().rowwise().minCoeff(), hi = data.values().rowwise().maxCoeff();
    const Vector centre = 0.5 * (lo + hi), extent = hi - lo;
    for (Index k = 0; k < f.cols(); ++k)
        ASSERT_TRUE(((f.col(k) - centre).cwiseAbs().array() <= extent.array()).all()) << "step " << k;
}

TEST(Reservoir, SpinupOfZeroStepsIsTheZeroState) {
    Reservoir res = Reservoir::build(small_params(), 3);
    res.drive_step(Vector::Ones(3));
    const TimeSeries u(Matrix::Ones(3, 10), 0.01);
    EXPECT_TRUE(res.spinup(u, 0).isZero(0.0));
}

TEST(Reservoir, EchoStateContraction) {
    MacroParams p = small_params();
    p.spectral_radius = 0.3;
    p.leak = 1.0;
    p.input_strength = 0.05;
    Reservoir a = Reservoir::build(p, 3);
    Reservoir b = Reservoir::build(p, 3);
    a.set_state(Vector::Constant(p.size, 0.9));
    b.set_state(Vector::Constant(p.size, -0.9));
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries u = integrate(l63, seeded_initial_state(l63, 2), 0.01, 100, 100);
    double previous = (a.state() - b.state()).norm();
    for (Index t = 0; t < u.len(); ++t) {
        a.drive_step(u.column(t));
        b.drive_step(u.column(t));
        const double d = (a.state() - b.state()).norm();
        EXPECT_LE(d, previous);
        previous = d;
    }
    EXPECT_LT(previous, 1e-6);
}

TEST(Reservoir, BatchDriveMatchesSingleDrive) {
    MacroParams p = small_params();
    p.readout = ReadoutKind::quadratic;
    Reservoir res = Reservoir::build(p, 3);
    res.set_readout_map(Matrix::Random(3, res.feature_dim()));
    BatchState batch = make_batch(res, 2);
    Reservoir single = res;
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries u = integrate(l63, seeded_initial_state(l63, 2), 0.01, 50, 100);
    for (Index t = 0; t < u.len(); ++t) {
        Matrix in(3, 2);
        in.col(0) = u.column(t);
        in.col(1) = u.column(u.len() - 1 - t);
        drive_batch(res, batch, in);
        single.drive_step(u.column(t));
    }
    EXPECT_LT((Vector(batch.states.col(0)) - single.state()).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((predict_batch(res, batch).col(0) - single.predict()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectral, ArnoldiAgreesWithDenseSolve) {
    for (std::uint64_t seed : {1, 2, 3}) {
        MacroParams p = small_params(seed);
        p.size = 400;
        const Reservoir res = Reservoir::build(p, 1);
        EXPECT_NEAR(spectral_radius_arnoldi(res.adjacency()), dense_spectral_radius(res.adjacency()), 1e-7);
    }
}
