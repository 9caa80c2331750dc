#include "reference_esn.hpp"

#include <Eigen/LU>
#include <cmath>

namespace rcf::acceptance {

namespace {

Vector driven(const ReferenceEsn& esn, const Vector& r, const Vector& u) {
    const Vector pre = esn.adjacency * r + esn.input_map * u;
    Vector next(r.size());
    for (Index i = 0; i < r.size(); ++i)
        next[i] = esn.leak * std::tanh(pre[i] + esn.input_bias) + (1.0 - esn.leak) * r[i];
    return next;
}

} // namespace

void ReferenceEsn::train(const TimeSeries& u, Index spinup) {
    const Index n = adjacency.rows();
    const Index chunk = 512;
    Matrix rr = Matrix::Zero(n, n);
    Matrix ru = Matrix::Zero(n, u.dim());
    Matrix block(n, chunk);
    Matrix targets(u.dim(), chunk);
    Index filled = 0;
    auto flush = [&] {
        rr.noalias() += block.leftCols(filled) * block.leftCols(filled).transpose();
        ru.noalias() += block.leftCols(filled) * targets.leftCols(filled).transpose();
        filled = 0;
    };
    Vector r = Vector::Zero(n);
    for (Index t = 0; t < u.len(); ++t) {
        if (t > 0) r = driven(*this, r, u.column(t - 1));
        if (t < spinup) continue;
        block.col(filled) = r;
        targets.col(filled) = u.column(t);
        if (++filled == chunk) flush();
    }
    if (filled > 0) flush();
    rr.diagonal().array() += tikhonov;
    readout = rr.partialPivLu().solve(ru).transpose();
}

std::vector<double> ReferenceEsn::vpt(const TimeSeries& truth, const std::vector<Index>& indices, Index spinup,
                                      Index horizon, const Vector& climatology_std, double threshold,
                                      double tau_lambda) const {
    std::vector<double> out;
    for (Index index : indices) {
        Vector r = Vector::Zero(adjacency.rows());
        for (Index k = index - spinup; k < index; ++k) r = driven(*this, r, truth.column(k));
        Index steps = horizon;
        for (Index k = 0; k < horizon; ++k) {
            const Vector forecast = readout * r;
            const Vector err = (forecast - truth.column(index + k)).cwiseQuotient(climatology_std);
            if (!(std::sqrt(err.squaredNorm() / static_cast<double>(err.size())) <= threshold)) {
                steps = k;
                break;
            }
            // Autonomous step: the prediction replaces the input.
            r = driven(*this, r, forecast);
        }
        out.push_back(static_cast<double>(steps) * truth.dt() / tau_lambda);
    }
    return out;
}

} // namespace rcf::acceptance
