#pragma once

#include "rcf/dynamics.hpp"
#include "rcf/time_series.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace rcf {

enum class NormScheme { none, per_variable, joint };

std::string_view to_string(NormScheme scheme);
NormScheme parse_norm_scheme(std::string_view text);

/// Statistics of one normalization scheme, always fitted on training data.
struct NormalizationStats {
    NormScheme scheme = NormScheme::none;
    Vector mean;        ///< per_variable
    Vector std;         ///< per_variable
    double joint_mean = 0.0;
    double joint_max = 0.0;
    double joint_min = 0.0;

    Matrix apply(const Matrix& values) const;
    Matrix invert(const Matrix& values) const;
    TimeSeries apply(const TimeSeries& series) const;
    TimeSeries invert(const TimeSeries& series) const;
};

/// Fits the scheme's statistics on `train`. Throws std::invalid_argument naming
/// the degenerate dimension when a std is zero, or when max == min.
NormalizationStats fit_normalization(const TimeSeries& train, NormScheme scheme);

/// fit_normalization followed by apply.
std::pair<TimeSeries, NormalizationStats> normalize(const TimeSeries& series, NormScheme scheme);

/// Adds i.i.d. Gaussian noise with std (percent / 100) * std(u_i) to row i.
TimeSeries add_noise(const TimeSeries& series, double percent, std::uint64_t seed);

/// Keeps every factor-th column starting at column 0; dt is multiplied by factor.
TimeSeries subsample(const TimeSeries& series, Index factor);

/// Multiplies row i by scale[i] (unit conversion of measurements).
TimeSeries rescale(const TimeSeries& series, const Vector& scale);

struct ForecastWindow {
    Index start = 0;   ///< first forecast column; spinup data precede it
    Index length = 0;
};

/// Training, validation and test segments cut from one trajectory, in that
/// order, so macro windows and test ICs never touch the ridge training data.
struct DataSplit {
    TimeSeries train;
    TimeSeries validation;
    std::vector<ForecastWindow> macro_windows;  ///< indices into validation
    std::optional<TimeSeries> test;
    std::vector<TestIc> test_ics;               ///< indices into test
};

struct SplitSizes {
    Index train_length = 100000;
    Index macro_windows = 15;
    Index window_length = 500;
    Index spinup = 100;
    Index test_ics = 200;
    Index test_horizon = 1000;

    bool operator==(const SplitSizes&) const = default;
};

/// Columns needed by split_series for the given sizes.
Index validation_length(const SplitSizes& sizes);
Index test_length(const SplitSizes& sizes);
Index required_length(const SplitSizes& sizes);

/// Cuts `full` into train | validation | test. Macro windows tile the validation
/// segment, each preceded by `spinup` columns; test ICs are sampled with
/// separation spinup + horizon. Throws std::invalid_argument when too short.
DataSplit split_series(const TimeSeries& full, const SplitSizes& sizes, std::uint64_t seed);

} // namespace rcf
