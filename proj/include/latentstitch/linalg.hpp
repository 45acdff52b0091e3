#pragma once

// Dense kernels used by the map solvers and the Frechet distance. All
// arithmetic is double precision; storage formats may be float.

#include <Eigen/Dense>

namespace latentstitch::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigendecomposition of a symmetric matrix: S = V diag(values) V^T,
/// values ascending, columns of V orthonormal.
struct SymEig {
    Vector values;
    Matrix vectors;
};

/// Relative symmetry defect max|A - A^T| / max(1, max|A|).
double symmetry_defect(const Eigen::Ref<const Matrix>& a);

/// Solves A X = B for symmetric positive definite A via Cholesky. One
/// factorization is shared by every column of B.
///
/// Throws NotSymmetric when A is asymmetric beyond 1e-9 (relative) and
/// NotSPD when a pivot is non-positive or collapses to rounding level
/// (L_jj^2 <= 1e-11 * A_jj), which callers treat as "add a ridge term".
Matrix spd_solve(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

SymEig sym_eig(const Eigen::Ref<const Matrix>& s);

/// Principal square root of a PSD matrix. Eigenvalues down to
/// -1e-6 * max(lambda) are clamped to zero; anything more negative is NotPSD.
Matrix psd_sqrt(const Eigen::Ref<const Matrix>& s);

}  // namespace latentstitch::linalg
