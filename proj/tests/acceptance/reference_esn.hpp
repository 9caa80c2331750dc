#pragma once

#include "rcf/time_series.hpp"
#include "rcf/types.hpp"

#include <vector>

namespace rcf::acceptance {

/// A deliberately plain echo state network written as directly as possible
/// from the textbook recursion, used to cross-check the library's pipeline.
/// Only the random matrices are shared with the library.
struct ReferenceEsn {
    SparseMatrix adjacency;
    Matrix input_map;
    double leak = 1.0;
    double input_bias = 0.0;
    double tikhonov = 1e-8;
    Matrix readout;  ///< D x N after train()

    /// States r_t with r_0 = 0 and r_t driven by u_{t-1}; the readout maps
    /// r_t to u_t for t >= spinup.
    void train(const TimeSeries& u, Index spinup);

    /// VPT in Lyapunov times of the forecast from each index of `truth`,
    /// after driving from zero through the `spinup` preceding columns.
    std::vector<double> vpt(const TimeSeries& truth, const std::vector<Index>& indices, Index spinup, Index horizon,
                            const Vector& climatology_std, double threshold, double tau_lambda) const;
};

} // namespace rcf::acceptance
