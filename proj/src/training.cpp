#include "rcf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rcf {

namespace {

Matrix regularized_solve(const Matrix& gram_lower, const Matrix& cross, double tikhonov) {
    Matrix g = gram_lower.selfadjointView<Eigen::Lower>();
    g.diagonal().array() += tikhonov;
    const Matrix rhs = cross.transpose();
    const double scale = std::max(cross.norm(), std::numeric_limits<double>::min());
    auto refine = [&](const auto& factor) {
        Matrix x = factor.solve(rhs);
        // One step of iterative refinement when the normal equations are not met.
        const Matrix residual = rhs - g * x;
        if (residual.norm() / scale > 1e-8) x += factor.solve(residual);
        if (!x.allFinite()) throw NumericalError("ridge_solve: solution is not finite; use a larger tikhonov");
        return Matrix(x.transpose());
    };

    Eigen::LLT<Matrix> llt(g);
    // Without regularization a rank deficient Gram matrix can still factor
    // through rounding, so its conditioning is checked as well.
    const bool singular = !(tikhonov > 0.0) && (llt.info() != Eigen::Success || llt.rcond() < 1e-14);
    if (llt.info() == Eigen::Success && !singular) return refine(llt);
    if (!(tikhonov > 0.0)) throw NumericalError("ridge_solve: feature Gram matrix is singular; use tikhonov > 0");
    if (!g.allFinite()) throw NumericalError("ridge_solve: feature Gram matrix is not finite");
    // A tiny beta on a nearly collinear feature set can lose definiteness to
    // rounding; the pivoted LDL^T factorization usually still solves it.
    Eigen::LDLT<Matrix> ldlt(g);
    if (ldlt.info() == Eigen::Success) {
        Matrix x = ldlt.solve(rhs);
        if (x.allFinite()) return refine(ldlt);
    }
    // Last resort for a numerically rank deficient system: the minimum norm
    // least squares solution.
    return refine(g.completeOrthogonalDecomposition());
}

} // namespace

Matrix ridge_solve(const RidgeProblem& problem) {
    if (problem.features.cols() != problem.targets.cols())
        throw std::invalid_argument("ridge_solve: features and targets need the same number of columns");
    if (problem.features.cols() < 1) throw std::invalid_argument("ridge_solve: no training columns");
    if (!(problem.tikhonov >= 0.0)) throw std::invalid_argument("ridge_solve: tikhonov must be nonnegative");
    const Index q = problem.features.rows();
    Matrix gram = Matrix::Zero(q, q);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(problem.features);
    Matrix cross = problem.targets * problem.features.transpose();
    return regularized_solve(gram, cross, problem.tikhonov);
}

RidgeAccumulator::RidgeAccumulator(Index feature_dim, Index target_dim, Index chunk)
    : chunk_(std::max<Index>(chunk, 1)), gram_(Matrix::Zero(feature_dim, feature_dim)),
      cross_(Matrix::Zero(target_dim, feature_dim)), feature_buf_(feature_dim, chunk_),
      target_buf_(target_dim, chunk_) {
    if (feature_dim < 1 || target_dim < 1)
        throw std::invalid_argument("RidgeAccumulator: dimensions must be >= 1");
}

void RidgeAccumulator::add(const Eigen::Ref<const Vector>& feature, const Eigen::Ref<const Vector>& target) {
    if (feature.size() != gram_.rows() || target.size() != cross_.rows())
        throw std::invalid_argument("RidgeAccumulator::add: dimension mismatch");
    feature_buf_.col(pending_) = feature;
    target_buf_.col(pending_) = target;
    ++pending_;
    ++count_;
    if (pending_ == chunk_) flush();
}

void RidgeAccumulator::flush() {
    if (pending_ == 0) return;
    const auto f = feature_buf_.leftCols(pending_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(f);
    cross_.noalias() += target_buf_.leftCols(pending_) * f.transpose();
    pending_ = 0;
}

Matrix RidgeAccumulator::solve(double tikhonov) {
    if (!(tikhonov >= 0.0)) throw std::invalid_argument("ridge_solve: tikhonov must be nonnegative");
    flush();
    if (count_ == 0) throw std::invalid_argument("ridge_solve: no training columns");
    return regularized_solve(gram_, cross_, tikhonov);
}

double RidgeAccumulator::normal_equation_residual(const Matrix& w_out, double tikhonov) {
    flush();
    Matrix g = gram_.selfadjointView<Eigen::Lower>();
    g.diagonal().array() += tikhonov;
    const double scale = std::max(cross_.norm(), std::numeric_limits<double>::min());
    return (w_out * g - cross_).norm() / scale;
}

void train_readout(Reservoir& res, const TimeSeries& train, Index spinup_steps) {
    train_readout(res, train, train, spinup_steps);
}

void train_readout(Reservoir& res, const TimeSeries& inputs, const TimeSeries& targets, Index spinup_steps) {
    if (inputs.len() != targets.len())
        throw std::invalid_argument("train_readout: inputs and targets must have equal length");
    if (inputs.dim() != res.input_dim())
        throw std::invalid_argument("train_readout: input dimension " + std::to_string(inputs.dim()) +
                                    " does not match the reservoir's " + std::to_string(res.input_dim()));
    if (targets.dim() != res.output_dim())
        throw std::invalid_argument("train_readout: target dimension does not match the reservoir output");
    if (spinup_steps < 0 || inputs.len() <= spinup_steps + 1)
        throw std::invalid_argument("train_readout: series length must exceed spinup_steps + 1");

    const ReadoutKind kind = res.params().readout;
    const Index first = std::max<Index>(spinup_steps, 1);
    RidgeAccumulator acc(res.feature_dim(), res.output_dim());
    res.reset();
    for (Index t = 0; t < inputs.len(); ++t) {
        if (t >= first) acc.add(readout_features(kind, res.state(), res.last_input()), targets.column(t));
        res.drive_step(inputs.column(t));
    }
    res.set_readout_map(acc.solve(res.params().tikhonov));
}

double discounted_window_error(const Matrix& forecast, const Matrix& truth) {
    if (forecast.rows() != truth.rows() || forecast.cols() != truth.cols())
        throw std::invalid_argument("discounted_window_error: forecast and truth shapes differ");
    const Index len = forecast.cols();
    double total = 0.0;
    for (Index k = 0; k < len; ++k) {
        const double weight = len > 1 ? std::exp(-static_cast<double>(k) / static_cast<double>(len - 1)) : 1.0;
        total += (forecast.col(k) - truth.col(k)).squaredNorm() * weight;
    }
    return total;
}

MacroLossResult evaluate_macro_loss(const MacroParams& params, const ReservoirFactory& factory,
                                    const DataSplit& data, const MacroLossOptions& opts) {
    MacroLossResult result;
    const Index windows = static_cast<Index>(data.macro_windows.size());
    if (windows < 1) throw std::invalid_argument("macro_loss: no macro windows");
    for (const auto& w : data.macro_windows)
        if (w.start < opts.spinup || w.length < 1 || w.start + w.length > data.validation.len())
            throw std::invalid_argument("macro_loss: window outside the validation segment");

    Reservoir res = factory(params);
    try {
        train_readout(res, data.train, opts.spinup);
    } catch (const NumericalError&) {
        result.training_failed = true;
        result.loss = opts.divergence_penalty * static_cast<double>(windows);
        return result;
    }

    // All windows advance together; column i of the batch belongs to window i.
    const Matrix& values = data.validation.values();
    BatchState batch = make_batch(res, windows);
    Matrix inputs(res.input_dim(), windows);
    for (Index k = 0; k < opts.spinup; ++k) {
        for (Index i = 0; i < windows; ++i) inputs.col(i) = values.col(data.macro_windows[i].start - opts.spinup + k);
        drive_batch(res, batch, inputs);
    }

    Index horizon = 0;
    for (const auto& w : data.macro_windows) horizon = std::max(horizon, w.length);
    std::vector<double> error(static_cast<std::size_t>(windows), 0.0);
    for (Index k = 0; k < horizon; ++k) {
        const Matrix pred = predict_batch(res, batch);
        for (Index i = 0; i < windows; ++i) {
            const ForecastWindow& w = data.macro_windows[i];
            if (k >= w.length) continue;
            const double weight =
                w.length > 1 ? std::exp(-static_cast<double>(k) / static_cast<double>(w.length - 1)) : 1.0;
            error[static_cast<std::size_t>(i)] += (pred.col(i) - values.col(w.start + k)).squaredNorm() * weight;
        }
        if (k + 1 < horizon) drive_batch(res, batch, pred);
    }
    for (double e : error) {
        if (std::isfinite(e)) {
            result.loss += e;
        } else {
            result.loss += opts.divergence_penalty;
            ++result.diverged_windows;
        }
    }
    return result;
}

double macro_loss(const MacroParams& params, const ReservoirFactory& factory, const DataSplit& data,
                  const MacroLossOptions& opts) {
    return evaluate_macro_loss(params, factory, data, opts).loss;
}

ReservoirFactory default_factory(Index dim) {
    return [dim](const MacroParams& p) { return Reservoir::build(p, dim); };
}

} // namespace rcf
