#include "rcf/evaluation.hpp"

#include "rcf/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace rcf {

ReservoirForecaster::ReservoirForecaster(const Reservoir& res) : res_(res) {
    if (res.output_dim() != res.input_dim())
        throw std::invalid_argument("ReservoirForecaster: autonomous mode needs output_dim == input_dim");
    if (!res.trained()) throw std::logic_error("ReservoirForecaster: reservoir is not trained");
}

std::unique_ptr<BatchForecaster> ReservoirForecaster::clone() const {
    return std::make_unique<ReservoirForecaster>(res_);
}

Matrix forecast_from(BatchForecaster& model, const TimeSeries& series, Index start, Index spinup, Index horizon) {
    if (start < spinup || spinup < 0) throw std::invalid_argument("forecast_from: not enough data before start");
    if (horizon < 1) throw std::invalid_argument("forecast_from: horizon must be >= 1");
    model.reset(1);
    for (Index k = start - spinup; k < start; ++k) model.drive(series.column(k));
    Matrix out(model.dim(), horizon);
    for (Index k = 0; k < horizon; ++k) {
        const Matrix pred = model.predict();
        out.col(k) = pred.col(0);
        if (k + 1 < horizon) model.drive(pred);
    }
    return out;
}

namespace {

void evaluate_batch(BatchForecaster& model, const TimeSeries& test, const std::vector<TestIc>& ics,
                    std::size_t first, std::size_t count, const Vector& clim, const EvaluationOptions& opts,
                    std::vector<ForecastEval>& out) {
    const Index b = static_cast<Index>(count);
    const Index d = model.dim();
    const Vector inv = clim.cwiseInverse();
    model.reset(b);
    Matrix inputs(d, b);
    for (Index k = 0; k < opts.spinup; ++k) {
        for (Index j = 0; j < b; ++j) inputs.col(j) = test.column(ics[first + j].index - opts.spinup + k);
        model.drive(inputs);
    }
    Matrix rmse(b, opts.horizon);
    std::vector<bool> crossed(count, false);
    Index done = 0;
    Index steps = 0;
    for (Index k = 0; k < opts.horizon; ++k) {
        const Matrix pred = model.predict();
        for (Index j = 0; j < b; ++j) {
            const Vector err = inv.asDiagonal() * (pred.col(j) - test.column(ics[first + j].index + k));
            const double value = std::sqrt(err.squaredNorm() / static_cast<double>(d));
            rmse(j, k) = value;
            if (!crossed[j] && !(value <= opts.threshold)) {
                crossed[j] = true;
                ++done;
            }
        }
        steps = k + 1;
        if (opts.stop_early && done == b) break;
        if (k + 1 < opts.horizon) model.drive(pred);
    }
    for (Index j = 0; j < b; ++j)
        out[first + j] = vpt(rmse.row(j).head(steps).transpose(), opts.threshold, test.dt(), opts.tau_lambda,
                             opts.horizon);
}

} // namespace

std::vector<ForecastEval> evaluate_forecasts(const BatchForecaster& model, const TimeSeries& test,
                                             const std::vector<TestIc>& ics, const Vector& climatology_std,
                                             const EvaluationOptions& opts) {
    if (ics.empty()) throw std::invalid_argument("evaluate_forecasts: no test ICs");
    if (opts.horizon < 1) throw std::invalid_argument("evaluate_forecasts: horizon must be >= 1");
    if (climatology_std.size() != model.dim() || !(climatology_std.array() > 0.0).all())
        throw std::invalid_argument("evaluate_forecasts: climatology std must be positive, one per dimension");
    for (const auto& ic : ics)
        if (ic.index < opts.spinup || ic.index + opts.horizon > test.len())
            throw std::invalid_argument("evaluate_forecasts: IC " + std::to_string(ic.index) +
                                        " lacks spinup or horizon data");

    const std::size_t n = ics.size();
    const std::size_t batch = opts.batch_size > 0 ? static_cast<std::size_t>(opts.batch_size) : n;
    const Index batches = static_cast<Index>((n + batch - 1) / batch);
    std::vector<ForecastEval> out(n);
    parallel_for(batches, opts.workers, [&](Index i) {
        auto local = model.clone();
        const std::size_t first = static_cast<std::size_t>(i) * batch;
        evaluate_batch(*local, test, ics, first, std::min(batch, n - first), climatology_std, opts, out);
    });
    return out;
}

} // namespace rcf
