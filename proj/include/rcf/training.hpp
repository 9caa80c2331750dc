#pragma once

#include "rcf/dataops.hpp"
#include "rcf/reservoir.hpp"
#include "rcf/time_series.hpp"

#include <functional>

namespace rcf {

/// Columns of reservoir features aligned with target columns.
struct RidgeProblem {
    Matrix features;  ///< Q x L
    Matrix targets;   ///< D x L
    double tikhonov = 0.0;
};

/// W_out = U R^T (R R^T + beta I)^-1 through a Cholesky solve of the
/// regularized Gram matrix. Throws NumericalError when the Gram matrix is
/// singular (advising beta > 0).
Matrix ridge_solve(const RidgeProblem& problem);

/// Streaming normal equations: accumulates G = sum q q^T and B = sum u q^T so
/// long training runs never hold the full feature matrix.
class RidgeAccumulator {
public:
    RidgeAccumulator(Index feature_dim, Index target_dim, Index chunk = 1024);

    void add(const Eigen::Ref<const Vector>& feature, const Eigen::Ref<const Vector>& target);
    Index count() const noexcept { return count_; }

    /// Solves (G + beta I) X = B^T and returns X^T. One step of iterative
    /// refinement is applied when the normal-equation residual exceeds 1e-8.
    Matrix solve(double tikhonov);

    /// Relative residual ||W (G + beta I) - B|| / ||B|| of a candidate readout.
    double normal_equation_residual(const Matrix& w_out, double tikhonov);

private:
    void flush();

    Index chunk_;
    Index pending_ = 0;
    Index count_ = 0;
    Matrix gram_;        // lower triangle maintained
    Matrix cross_;       // D x Q
    Matrix feature_buf_; // Q x chunk
    Matrix target_buf_;  // D x chunk
};

/// Drives the reservoir from the zero state through `train`, pairs Q(r(t))
/// with u(t) for t >= max(spinup_steps, 1) (r(t) has seen inputs up to u(t-1)),
/// solves the ridge problem and installs W_out. The reservoir is left
/// synchronized to the end of the series.
void train_readout(Reservoir& res, const TimeSeries& train, Index spinup_steps);

/// Same, with inputs and targets given separately (targets may be a row
/// subset, as in localized training).
void train_readout(Reservoir& res, const TimeSeries& inputs, const TimeSeries& targets, Index spinup_steps);

/// Exponentially discounted squared forecast error over one window:
/// sum_k ||f_k - u_k||^2 exp(-k / (len - 1)). len = 1 uses weight 1.
double discounted_window_error(const Matrix& forecast, const Matrix& truth);

struct MacroLossOptions {
    Index spinup = 100;
    /// Added per window whose forecast leaves the finite range.
    double divergence_penalty = 1e12;
};

struct MacroLossResult {
    double loss = 0.0;
    Index diverged_windows = 0;
    bool training_failed = false;

    bool finite() const noexcept { return diverged_windows == 0 && !training_failed; }
};

using ReservoirFactory = std::function<Reservoir(const MacroParams&)>;

/// Builds and trains a reservoir for `params`, then accumulates the discounted
/// forecast error over every macro window of the validation segment.
MacroLossResult evaluate_macro_loss(const MacroParams& params, const ReservoirFactory& factory,
                                    const DataSplit& data, const MacroLossOptions& opts = {});

/// evaluate_macro_loss with divergences replaced by the penalty.
double macro_loss(const MacroParams& params, const ReservoirFactory& factory, const DataSplit& data,
                  const MacroLossOptions& opts = {});

/// Factory building a reservoir with input and output dimension `dim`.
ReservoirFactory default_factory(Index dim);

} // namespace rcf
