#include "rcf/time_series.hpp"

#include <string>

namespace rcf {

TimeSeries::TimeSeries(Matrix values, double dt) : values_(std::move(values)), dt_(dt) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("TimeSeries: dt must be positive");
    if (values_.cols() < 2)
        throw std::invalid_argument("TimeSeries: need at least 2 samples, got " +
                                    std::to_string(values_.cols()));
    if (values_.rows() < 1) throw std::invalid_argument("TimeSeries: dimension must be >= 1");
    if (!values_.allFinite()) throw std::invalid_argument("TimeSeries: non-finite entries");
}

TimeSeries TimeSeries::slice(Index start, Index count) const {
    if (start < 0 || count < 0 || start + count > len())
        throw std::out_of_range("TimeSeries::slice: [" + std::to_string(start) + ", " +
                                std::to_string(start + count) + ") outside length " +
                                std::to_string(len()));
    return TimeSeries(values_.middleCols(start, count), dt_);
}

TimeSeries TimeSeries::select_rows(const std::vector<Index>& indices) const {
    Matrix out(static_cast<Index>(indices.size()), len());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= dim())
            throw std::out_of_range("TimeSeries::select_rows: bad row index");
        out.row(static_cast<Index>(i)) = values_.row(indices[i]);
    }
    return TimeSeries(std::move(out), dt_);
}

Vector TimeSeries::mean() const { return values_.rowwise().mean(); }

Vector TimeSeries::stddev() const {
    const Vector mu = mean();
    const Matrix centered = values_.colwise() - mu;
    return (centered.rowwise().squaredNorm() / static_cast<double>(len())).cwiseSqrt();
}

} // namespace rcf
