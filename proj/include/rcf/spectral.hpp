#pragma once

#include "rcf/types.hpp"

namespace rcf {

struct ArnoldiOptions {
    Index subspace = 40;    ///< Krylov dimension before each restart.
    Index keep = 20;        ///< Ritz vectors kept across a restart.
    double tolerance = 1e-8;
    Index max_restarts = 1000;
};

/// Largest eigenvalue magnitude of a square matrix via a dense eigensolve.
double spectral_radius_dense(const Matrix& a);

/// Largest eigenvalue magnitude via Krylov-Schur restarted Arnoldi in complex
/// arithmetic. Converges when the leading Ritz residual falls below
/// tolerance * |ritz value|. Throws NumericalError if it does not converge.
double spectral_radius_arnoldi(const SparseMatrix& a, const ArnoldiOptions& opts = {});

/// Dense eigensolve for n <= 500, Arnoldi above.
double spectral_radius(const SparseMatrix& a);

} // namespace rcf
