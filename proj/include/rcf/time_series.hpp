#pragma once

#include "rcf/types.hpp"

#include <vector>

namespace rcf {

/// A D-dimensional sequence sampled at a fixed step. Columns are time.
class TimeSeries {
public:
    /// Throws std::invalid_argument unless values are finite, len >= 2 and dt > 0.
    TimeSeries(Matrix values, double dt);

    Index dim() const noexcept { return values_.rows(); }
    Index len() const noexcept { return values_.cols(); }
    double dt() const noexcept { return dt_; }
    double span() const noexcept { return static_cast<double>(len()) * dt_; }

    const Matrix& values() const noexcept { return values_; }
    auto column(Index t) const { return values_.col(t); }

    /// Columns [start, start + count).
    TimeSeries slice(Index start, Index count) const;

    /// Rows listed in `indices`, in that order.
    TimeSeries select_rows(const std::vector<Index>& indices) const;

    /// Per-row mean and population standard deviation.
    Vector mean() const;
    Vector stddev() const;

private:
    Matrix values_;
    double dt_;
};

} // namespace rcf
