#pragma once

#include "rcf/time_series.hpp"
#include "rcf/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rcf {

/// Valid prediction time of one forecast.
struct ForecastEval {
    Vector rmse_series;     ///< entry k compares forecast column k with truth
    Index vpt_steps = 0;    ///< first k with rmse_series[k] > threshold, else the horizon
    double vpt_lyapunov = 0.0;
    double threshold = 0.3;
    bool truncated = false; ///< threshold never exceeded within the horizon
};

/// Per-step sqrt(mean_i ((f_i - u_i) / sigma_i)^2). Throws std::invalid_argument
/// on shape mismatch or a nonpositive sigma_i.
Vector nrmse(const Matrix& forecast, const Matrix& truth, const Vector& climatology_std);
Vector nrmse(const TimeSeries& forecast, const TimeSeries& truth, const Vector& climatology_std);

/// First strict exceedance of `threshold`. `horizon` defaults to the series
/// length; a longer horizon lets a forecast that stopped early still report
/// itself as truncated only when it really reached the horizon.
ForecastEval vpt(const Vector& rmse_series, double threshold, double dt, double tau_lambda, Index horizon = -1);

struct VptSummary {
    Index count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    Index truncated = 0;
    std::vector<double> bin_edges;  ///< bins + 1 edges in Lyapunov times
    std::vector<Index> histogram;
};

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Distribution of vpt_lyapunov over many forecasts. Throws on an empty list.
VptSummary vpt_distribution(const std::vector<ForecastEval>& evals, Index bins = 20);

std::string summary_json(const VptSummary& summary);

/// CSV with columns ic_index, vpt_steps, vpt_lyapunov, truncated.
void write_evaluation_csv(const std::filesystem::path& path, const std::vector<Index>& ic_indices,
                          const std::vector<ForecastEval>& evals);

} // namespace rcf
