#include "rcf/metrics.hpp"

#include "rcf/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rcf {

Vector nrmse(const Matrix& forecast, const Matrix& truth, const Vector& climatology_std) {
    if (forecast.rows() != truth.rows() || forecast.cols() != truth.cols())
        throw std::invalid_argument("nrmse: forecast and truth shapes differ");
    if (climatology_std.size() != truth.rows())
        throw std::invalid_argument("nrmse: one climatology std per dimension required");
    for (Index i = 0; i < climatology_std.size(); ++i)
        if (!(climatology_std[i] > 0.0))
            throw std::invalid_argument("nrmse: climatology std of dimension " + std::to_string(i) +
                                        " is not positive");
    const Vector inv = climatology_std.cwiseInverse();
    const Matrix scaled = inv.asDiagonal() * (forecast - truth);
    return (scaled.colwise().squaredNorm().transpose() / static_cast<double>(truth.rows())).cwiseSqrt();
}

Vector nrmse(const TimeSeries& forecast, const TimeSeries& truth, const Vector& climatology_std) {
    return nrmse(forecast.values(), truth.values(), climatology_std);
}

ForecastEval vpt(const Vector& rmse_series, double threshold, double dt, double tau_lambda, Index horizon) {
    if (!(threshold > 0.0)) throw std::invalid_argument("vpt: threshold must be positive");
    if (!(dt > 0.0) || !(tau_lambda > 0.0)) throw std::invalid_argument("vpt: dt and tau_lambda must be positive");
    if (horizon < 0) horizon = rmse_series.size();
    ForecastEval eval;
    eval.rmse_series = rmse_series;
    eval.threshold = threshold;
    eval.vpt_steps = horizon;
    eval.truncated = true;
    for (Index k = 0; k < rmse_series.size(); ++k) {
        // NaN counts as an exceedance: a diverged forecast has no skill left.
        if (!(rmse_series[k] <= threshold)) {
            eval.vpt_steps = k;
            eval.truncated = false;
            break;
        }
    }
    eval.vpt_lyapunov = static_cast<double>(eval.vpt_steps) * dt / tau_lambda;
    return eval;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

VptSummary vpt_distribution(const std::vector<ForecastEval>& evals, Index bins) {
    if (evals.empty()) throw std::invalid_argument("vpt_distribution: no forecasts");
    if (bins < 1) throw std::invalid_argument("vpt_distribution: bins must be >= 1");
    std::vector<double> v;
    v.reserve(evals.size());
    VptSummary s;
    for (const auto& e : evals) {
        v.push_back(e.vpt_lyapunov);
        if (e.truncated) ++s.truncated;
    }
    s.count = static_cast<Index>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.median = quantile(v, 0.5);
    s.q1 = quantile(v, 0.25);
    s.q3 = quantile(v, 0.75);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());

    const double lo = s.min;
    const double width = s.max > s.min ? (s.max - s.min) / static_cast<double>(bins) : 1.0;
    for (Index b = 0; b <= bins; ++b) s.bin_edges.push_back(lo + width * static_cast<double>(b));
    s.histogram.assign(static_cast<std::size_t>(bins), 0);
    for (double x : v) {
        auto b = static_cast<Index>((x - lo) / width);
        b = std::clamp<Index>(b, 0, bins - 1);
        ++s.histogram[static_cast<std::size_t>(b)];
    }
    return s;
}

std::string summary_json(const VptSummary& s) {
    nlohmann::ordered_json j;
    j["count"] = s.count;
    j["mean"] = s.mean;
    j["median"] = s.median;
    j["q1"] = s.q1;
    j["q3"] = s.q3;
    j["min"] = s.min;
    j["max"] = s.max;
    j["truncated"] = s.truncated;
    j["bin_edges"] = s.bin_edges;
    j["histogram"] = s.histogram;
    return j.dump(2);
}

void write_evaluation_csv(const std::filesystem::path& path, const std::vector<Index>& ic_indices,
                          const std::vector<ForecastEval>& evals) {
    if (ic_indices.size() != evals.size())
        throw std::invalid_argument("write_evaluation_csv: one IC index per evaluation required");
    CsvWriter csv(path, {"ic_index", "vpt_steps", "vpt_lyapunov", "truncated"});
    for (std::size_t i = 0; i < evals.size(); ++i) {
        csv << ic_indices[i] << evals[i].vpt_steps << evals[i].vpt_lyapunov << (evals[i].truncated ? 1 : 0);
        csv.end_row();
    }
}

} // namespace rcf
