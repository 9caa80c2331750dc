#include "rcf/dataops.hpp"

#include "rcf/random.hpp"

#include <string>

namespace rcf {

std::string_view to_string(NormScheme scheme) {
    switch (scheme) {
    case NormScheme::none: return "none";
    case NormScheme::per_variable: return "per_variable";
    case NormScheme::joint: return "joint";
    }
    return "none";
}

NormScheme parse_norm_scheme(std::string_view text) {
    if (text == "none") return NormScheme::none;
    if (text == "per_variable" || text == "scheme1") return NormScheme::per_variable;
    if (text == "joint" || text == "scheme2") return NormScheme::joint;
    throw std::invalid_argument("unknown normalization '" + std::string(text) +
                                "'; expected none, per_variable or joint");
}

Matrix NormalizationStats::apply(const Matrix& values) const {
    switch (scheme) {
    case NormScheme::none: return values;
    case NormScheme::per_variable:
        return (values.colwise() - mean).array().colwise() / std.array();
    case NormScheme::joint:
        return (values.array() - joint_mean) / (joint_max - joint_min);
    }
    return values;
}

Matrix NormalizationStats::invert(const Matrix& values) const {
    switch (scheme) {
    case NormScheme::none: return values;
    case NormScheme::per_variable:
        return (values.array().colwise() * std.array()).matrix().colwise() + mean;
    case NormScheme::joint:
        return values.array() * (joint_max - joint_min) + joint_mean;
    }
    return values;
}

TimeSeries NormalizationStats::apply(const TimeSeries& series) const {
    return TimeSeries(apply(series.values()), series.dt());
}

TimeSeries NormalizationStats::invert(const TimeSeries& series) const {
    return TimeSeries(invert(series.values()), series.dt());
}

NormalizationStats fit_normalization(const TimeSeries& train, NormScheme scheme) {
    NormalizationStats stats;
    stats.scheme = scheme;
    if (scheme == NormScheme::per_variable) {
        stats.mean = train.mean();
        stats.std = train.stddev();
        for (Index i = 0; i < stats.std.size(); ++i)
            if (!(stats.std[i] > 0.0))
                throw std::invalid_argument("normalize: dimension " + std::to_string(i) +
                                            " has zero standard deviation");
    } else if (scheme == NormScheme::joint) {
        stats.joint_mean = train.values().mean();
        stats.joint_max = train.values().maxCoeff();
        stats.joint_min = train.values().minCoeff();
        if (!(stats.joint_max > stats.joint_min))
            throw std::invalid_argument("normalize: joint max equals joint min (constant data)");
    }
    return stats;
}

std::pair<TimeSeries, NormalizationStats> normalize(const TimeSeries& series, NormScheme scheme) {
    NormalizationStats stats = fit_normalization(series, scheme);
    if (scheme == NormScheme::none) return {series, stats};
    return {stats.apply(series), stats};
}

TimeSeries add_noise(const TimeSeries& series, double percent, std::uint64_t seed) {
    if (!(percent >= 0.0)) throw std::invalid_argument("add_noise: percent must be nonnegative");
    if (percent == 0.0) return series;
    const Vector amplitude = (percent / 100.0) * series.stddev();
    Rng rng(seed);
    Matrix noisy = series.values();
    // Column-major draw order: all dimensions of sample 0, then sample 1, ...
    for (Index t = 0; t < noisy.cols(); ++t)
        for (Index i = 0; i < noisy.rows(); ++i) noisy(i, t) += amplitude[i] * rng.normal();
    return TimeSeries(std::move(noisy), series.dt());
}

TimeSeries subsample(const TimeSeries& series, Index factor) {
    if (factor < 1) throw std::invalid_argument("subsample: factor must be >= 1");
    if (factor == 1) return series;
    const Index count = (series.len() + factor - 1) / factor;
    Matrix out(series.dim(), count);
    for (Index k = 0; k < count; ++k) out.col(k) = series.column(k * factor);
    return TimeSeries(std::move(out), series.dt() * static_cast<double>(factor));
}

TimeSeries rescale(const TimeSeries& series, const Vector& scale) {
    if (scale.size() != series.dim()) throw std::invalid_argument("rescale: one factor per dimension required");
    return TimeSeries(scale.asDiagonal() * series.values(), series.dt());
}

Index validation_length(const SplitSizes& s) { return s.macro_windows * (s.spinup + s.window_length); }

Index test_length(const SplitSizes& s) {
    if (s.test_ics == 0) return 0;
    const Index spacing = s.spinup + s.test_horizon;
    const Index minimum = s.test_ics * spacing + 1;
    return minimum + minimum / 10;
}

Index required_length(const SplitSizes& s) { return s.train_length + validation_length(s) + test_length(s); }

DataSplit split_series(const TimeSeries& full, const SplitSizes& s, std::uint64_t seed) {
    if (s.train_length < 2) throw std::invalid_argument("split_series: train_length must be >= 2");
    if (s.macro_windows < 1 || s.window_length < 1)
        throw std::invalid_argument("split_series: need at least one macro window of positive length");
    if (s.spinup < 1) throw std::invalid_argument("split_series: spinup must be >= 1");
    const Index need = required_length(s);
    if (full.len() < need)
        throw std::invalid_argument("split_series: series has " + std::to_string(full.len()) +
                                    " samples, split needs " + std::to_string(need));

    const Index val_len = validation_length(s);
    std::vector<ForecastWindow> windows;
    for (Index i = 0; i < s.macro_windows; ++i)
        windows.push_back({i * (s.spinup + s.window_length) + s.spinup, s.window_length});

    DataSplit split{full.slice(0, s.train_length), full.slice(s.train_length, val_len), std::move(windows),
                    std::nullopt, {}};
    if (s.test_ics > 0) {
        TimeSeries test = full.slice(s.train_length + val_len, test_length(s));
        split.test_ics = sample_test_ics(test, s.test_ics, s.spinup + s.test_horizon, seed, s.spinup,
                                         s.test_horizon);
        split.test = std::move(test);
    }
    return split;
}

} // namespace rcf
