#include "rcf/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <string>

namespace rcf {
namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Swap diagonal entries k and k+1 of an upper-triangular T with a unitary
// rotation, updating the accumulated Schur vectors Q.
void swap_adjacent(ComplexMatrix& t, ComplexMatrix& q, Index k) {
    const Complex t11 = t(k, k), t22 = t(k + 1, k + 1), t12 = t(k, k + 1);
    const Complex x0 = t12, x1 = t22 - t11;
    const double norm = std::sqrt(std::norm(x0) + std::norm(x1));
    if (norm == 0.0) return;
    const Complex c = x0 / norm, s = x1 / norm;
    Eigen::Matrix2cd g;
    g << c, -std::conj(s), s, std::conj(c);
    t.middleRows(k, 2) = g.adjoint() * t.middleRows(k, 2);
    t.middleCols(k, 2) = t.middleCols(k, 2) * g;
    q.middleCols(k, 2) = q.middleCols(k, 2) * g;
    t(k + 1, k) = 0.0;
}

// Move the `keep` largest-magnitude eigenvalues to the leading positions.
void sort_schur(ComplexMatrix& t, ComplexMatrix& q, Index keep) {
    const Index m = t.rows();
    for (Index p = 0; p < keep; ++p) {
        Index best = p;
        for (Index j = p + 1; j < m; ++j)
            if (std::abs(t(j, j)) > std::abs(t(best, best))) best = j;
        for (Index j = best - 1; j >= p; --j) swap_adjacent(t, q, j);
    }
}

ComplexVector sparse_times(const SparseMatrix& a, const ComplexVector& v) {
    ComplexVector w(v.size());
    w.real() = a * v.real();
    w.imag() = a * v.imag();
    return w;
}

} // namespace

double spectral_radius_dense(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
    if (a.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(a, false);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolve failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_arnoldi(const SparseMatrix& a, const ArnoldiOptions& opts) {
    const Index n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
    if (n == 0) return 0.0;
    if (a.nonZeros() == 0) return 0.0;

    const Index m = std::min(opts.subspace, n);
    const Index keep = std::clamp<Index>(opts.keep, 1, std::max<Index>(m - 1, 1));
    if (m < 3) return spectral_radius_dense(Matrix(a));

    ComplexMatrix v = ComplexMatrix::Zero(n, m + 1);
    ComplexMatrix h = ComplexMatrix::Zero(m + 1, m);
    // Deterministic start vector with no special alignment to the pattern.
    for (Index i = 0; i < n; ++i) v(i, 0) = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
    v.col(0).normalize();

    Index filled = 0;
    for (Index restart = 0; restart < opts.max_restarts; ++restart) {
        for (Index j = filled; j < m; ++j) {
            ComplexVector w = sparse_times(a, v.col(j));
            // Two passes of classical Gram-Schmidt.
            for (int pass = 0; pass < 2; ++pass) {
                const ComplexVector c = v.leftCols(j + 1).adjoint() * w;
                w -= v.leftCols(j + 1) * c;
                h.col(j).head(j + 1) += c;
            }
            const double beta = w.norm();
            h(j + 1, j) = beta;
            if (beta < 1e-300) {
                // Invariant subspace found: eigenvalues of the leading block are exact.
                Eigen::ComplexEigenSolver<ComplexMatrix> es(h.topLeftCorner(j + 1, j + 1), false);
                return es.eigenvalues().cwiseAbs().maxCoeff();
            }
            v.col(j + 1) = w / beta;
        }

        Eigen::ComplexSchur<ComplexMatrix> schur(h.topLeftCorner(m, m));
        ComplexMatrix t = schur.matrixT();
        ComplexMatrix q = schur.matrixU();
        sort_schur(t, q, keep);

        const Eigen::RowVectorXcd coupling = h(m, m - 1) * q.row(m - 1);
        const double lead = std::abs(t(0, 0));
        if (std::abs(coupling(0)) <= opts.tolerance * std::max(lead, 1e-300)) return lead;

        const ComplexMatrix kept = v.leftCols(m) * q.leftCols(keep);
        const ComplexVector next = v.col(m);
        v.setZero();
        v.leftCols(keep) = kept;
        v.col(keep) = next;
        h.setZero();
        h.topLeftCorner(keep, keep) = t.topLeftCorner(keep, keep);
        h.row(keep).head(keep) = coupling.head(keep);
        filled = keep;
    }
    throw NumericalError("spectral_radius: Arnoldi did not converge after " +
                         std::to_string(opts.max_restarts) + " restarts");
}

double spectral_radius(const SparseMatrix& a) {
    if (a.rows() <= 500) return spectral_radius_dense(Matrix(a));
    return spectral_radius_arnoldi(a);
}

} // namespace rcf
