#include "rcf/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rcf;

TEST(Nrmse, ZeroForAPerfectForecast) {
    const Matrix truth = Matrix::Random(3, 20);
    EXPECT_TRUE(nrmse(truth, truth, Vector::Ones(3)).isZero(0.0));
}

TEST(Nrmse, ErrorOfOneStdIsOne) {
    const Vector sigma{{2.0, 0.5}};
    const Matrix truth = Matrix::Zero(2, 4);
    const Matrix forecast = sigma.replicate(1, 4);
    const Vector e = nrmse(forecast, truth, sigma);
    for (Index k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(e[k], 1.0);
}

TEST(Nrmse, MixedExample) {
    const Vector sigma{{3.0, 7.0}};
    const Matrix truth = Matrix::Zero(2, 1);
    const Matrix forecast = Matrix{{0.3 * 3.0}, {0.4 * 7.0}};
    EXPECT_NEAR(nrmse(forecast, truth, sigma)[0], std::sqrt(0.125), 1e-12);
    EXPECT_NEAR(nrmse(forecast, truth, sigma)[0], 0.3536, 1e-4);
}

TEST(Nrmse, InvariantToPerComponentScaling) {
    const Matrix truth = Matrix::Random(3, 30);
    const Matrix forecast = truth + 0.1 * Matrix::Random(3, 30);
    const Vector sigma{{1.0, 2.0, 0.5}};
    const Vector scale{{10.0, 1e-3, 7.0}};
    const Vector a = nrmse(forecast, truth, sigma);
    const Vector b = nrmse(scale.asDiagonal() * forecast, scale.asDiagonal() * truth, scale.cwiseProduct(sigma));
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nrmse, RejectsBadInput) {
    EXPECT_THROW(nrmse(Matrix::Zero(2, 3), Matrix::Zero(2, 4), Vector::Ones(2)), std::invalid_argument);
    EXPECT_THROW(nrmse(Matrix::Zero(2, 3), Matrix::Zero(2, 3), Vector{{1.0, 0.0}}), std::invalid_argument);
}

TEST(Vpt, NeverExceededIsTruncated) {
    const ForecastEval e = vpt(Vector::Constant(50, 0.1), 0.3, 0.01, 1.0);
    EXPECT_TRUE(e.truncated);
    EXPECT_EQ(e.vpt_steps, 50);
    EXPECT_NEAR(e.vpt_lyapunov, 0.5, 1e-12);
}

TEST(Vpt, ImmediateFailureIsZero) {
    const ForecastEval e = vpt(Vector::Constant(50, 1.0), 0.3, 0.01, 1.0);
    EXPECT_FALSE(e.truncated);
    EXPECT_EQ(e.vpt_steps, 0);
    EXPECT_EQ(e.vpt_lyapunov, 0.0);
}

TEST(Vpt, ExponentialErrorGrowth) {
    // Error 0.01 exp(lambda t) crosses 0.3 at t = ln(30) / lambda.
    const double lambda = 0.9, dt = 0.01;
    Vector rmse(2000);
    for (Index k = 0; k < rmse.size(); ++k) rmse[k] = 0.01 * std::exp(lambda * dt * static_cast<double>(k));
    const ForecastEval e = vpt(rmse, 0.3, dt, 1.0 / lambda);
    const double crossing = std::log(30.0) / lambda;
    EXPECT_NEAR(static_cast<double>(e.vpt_steps) * dt, crossing, dt);
    EXPECT_NEAR(e.vpt_lyapunov, std::log(30.0), lambda * dt);
}

TEST(Vpt, MonotoneInThreshold) {
    Vector rmse(300);
    for (Index k = 0; k < rmse.size(); ++k) rmse[k] = 0.5 * (1.0 - std::cos(0.05 * static_cast<double>(k))) + 1e-3 * static_cast<double>(k);
    Index previous = 0;
    for (double eps : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8}) {
        const Index steps = vpt(rmse, eps, 0.01, 1.0).vpt_steps;
        EXPECT_GE(steps, previous);
        previous = steps;
    }
}

TEST(Vpt, EarlyStoppedSeriesKeepsItsCrossing) {
    Vector rmse = Vector::Constant(10, 0.1);
    rmse[6] = 0.5;
    const ForecastEval e = vpt(rmse, 0.3, 0.01, 1.0, 100);
    EXPECT_FALSE(e.truncated);
    EXPECT_EQ(e.vpt_steps, 6);
    EXPECT_EQ(vpt(Vector::Constant(10, 0.1), 0.3, 0.01, 1.0, 100).vpt_steps, 100);
}

TEST(Distribution, SingleForecast) {
    ForecastEval e;
    e.vpt_lyapunov = 4.2;
    const VptSummary s = vpt_distribution({e});
    EXPECT_EQ(s.count, 1);
    EXPECT_DOUBLE_EQ(s.mean, 4.2);
    EXPECT_DOUBLE_EQ(s.median, 4.2);
    EXPECT_DOUBLE_EQ(s.q1, 4.2);
    EXPECT_DOUBLE_EQ(s.q3, 4.2);
}

TEST(Distribution, ConstantListHasZeroSpread) {
    ForecastEval e;
    e.vpt_lyapunov = 3.0;
    const VptSummary s = vpt_distribution(std::vector<ForecastEval>(10, e));
    EXPECT_DOUBLE_EQ(s.q3 - s.q1, 0.0);
    EXPECT_DOUBLE_EQ(s.min, s.max);
    Index total = 0;
    for (Index c : s.histogram) total += c;
    EXPECT_EQ(total, 10);
}

TEST(Distribution, QuantilesAndTruncationCount) {
    std::vector<ForecastEval> evals;
    for (int i = 1; i <= 5; ++i) {
        ForecastEval e;
        e.vpt_lyapunov = static_cast<double>(i);
        e.truncated = i == 5;
        evals.push_back(e);
    }
    const VptSummary s = vpt_distribution(evals, 4);
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.q1, 2.0);
    EXPECT_DOUBLE_EQ(s.q3, 4.0);
    EXPECT_EQ(s.truncated, 1);
    EXPECT_EQ(s.bin_edges.size(), 5u);
    EXPECT_THROW(vpt_distribution({}), std::invalid_argument);
}

TEST(Distribution, QuantileInterpolates) {
    EXPECT_DOUBLE_EQ(quantile({0.0, 10.0}, 0.25), 2.5);
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
}
