#pragma once

#include "rcf/dynamics.hpp"
#include "rcf/metrics.hpp"
#include "rcf/reservoir.hpp"

#include <memory>
#include <vector>

namespace rcf {

/// A trained model that advances many trajectories at once, one per column.
/// Implementations keep their own batch state, so a clone can run on another
/// thread while sharing the frozen model.
class BatchForecaster {
public:
    virtual ~BatchForecaster() = default;
    virtual Index dim() const = 0;
    /// Zero state for `batch` trajectories.
    virtual void reset(Index batch) = 0;
    /// Driven step with dim x batch inputs.
    virtual void drive(const Matrix& inputs) = 0;
    /// dim x batch predictions of the current states.
    virtual Matrix predict() const = 0;
    virtual std::unique_ptr<BatchForecaster> clone() const = 0;
};

class ReservoirForecaster final : public BatchForecaster {
public:
    explicit ReservoirForecaster(const Reservoir& res);

    Index dim() const override { return res_.output_dim(); }
    void reset(Index batch) override { batch_ = make_batch(res_, batch); }
    void drive(const Matrix& inputs) override { drive_batch(res_, batch_, inputs); }
    Matrix predict() const override { return predict_batch(res_, batch_); }
    std::unique_ptr<BatchForecaster> clone() const override;

private:
    const Reservoir& res_;
    BatchState batch_;
};

/// Spins up on columns [start - spinup, start) of `series`, then runs
/// autonomously. Column k of the result is the forecast of series column
/// start + k.
Matrix forecast_from(BatchForecaster& model, const TimeSeries& series, Index start, Index spinup, Index horizon);

struct EvaluationOptions {
    Index spinup = 100;
    Index horizon = 1000;
    double threshold = 0.3;
    double tau_lambda = 1.0;
    /// Stop a batch once every forecast in it has crossed the threshold.
    bool stop_early = true;
    /// Forecasts advanced together; 0 puts every IC in one batch.
    Index batch_size = 0;
    unsigned workers = 1;
};

/// Forecasts from every test IC (spinup on the truth preceding it) and
/// evaluates the VPT against `test`, normalized by `climatology_std`.
std::vector<ForecastEval> evaluate_forecasts(const BatchForecaster& model, const TimeSeries& test,
                                             const std::vector<TestIc>& ics, const Vector& climatology_std,
                                             const EvaluationOptions& opts);

} // namespace rcf
