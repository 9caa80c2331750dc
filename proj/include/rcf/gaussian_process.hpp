#pragma once

#include "rcf/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace rcf {

/// Minimizes f from `start` with the Nelder-Mead simplex method. `step` is
/// the initial simplex edge along each coordinate.
struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    Index iterations = 0;
};
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start, double step,
                             Index max_iterations = 500, double tolerance = 1e-10);

/// Gaussian-process regression with an anisotropic squared-exponential
/// kernel s^2 exp(-0.5 sum_i (x_i - x'_i)^2 / l_i^2) plus a nugget on the
/// diagonal. Targets are standardized internally.
class GaussianProcess {
public:
    struct Hyper {
        Vector log_length;       ///< log l_i, one per input dimension
        double log_signal = 0.0; ///< log s^2
        double log_nugget = std::log(1e-6);
    };

    /// Fits hyperparameters by maximizing the log marginal likelihood
    /// (multi-start Nelder-Mead in log space) and conditions on the data.
    void fit(const Matrix& x, const Vector& y);
    /// Conditions on the data with fixed hyperparameters.
    void condition(const Matrix& x, const Vector& y, const Hyper& hyper);

    /// Posterior mean and standard deviation in the units of y.
    void predict(const Vector& x, double& mean, double& stddev) const;
    double log_marginal_likelihood(const Hyper& hyper) const;

    const Hyper& hyper() const noexcept { return hyper_; }
    Index size() const noexcept { return x_.cols(); }

private:
    double kernel(const Vector& a, const Vector& b, const Vector& inv_len2, double signal) const;
    Matrix gram(const Hyper& hyper) const;

    Matrix x_;   // d x n
    Vector y_;   // standardized
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Hyper hyper_;
    Eigen::LLT<Matrix> llt_;
    Vector alpha_;
};

/// Expected improvement below `best` for a Gaussian posterior (mean, stddev).
double expected_improvement(double mean, double stddev, double best);

/// Latin hypercube of `count` points in [0,1]^dim (one column per point).
Matrix latin_hypercube(Index count, Index dim, std::uint64_t seed);

} // namespace rcf
