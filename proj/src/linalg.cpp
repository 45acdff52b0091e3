#include "latentstitch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latentstitch/error.hpp"

namespace latentstitch::linalg {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kPivotCollapse = 1e-11;
constexpr double kNegativeEigTol = 1e-6;

void require_square_symmetric(const Eigen::Ref<const Matrix>& a, const char* who) {
    require(a.rows() == a.cols() && a.rows() >= 1, ErrorCode::DimensionMismatch,
            std::string(who) + ": expected non-empty square matrix, got " +
                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    require(a.allFinite(), ErrorCode::NonFiniteValue, std::string(who) + ": non-finite entry");
    const double defect = symmetry_defect(a);
    require(defect <= kSymmetryTol, ErrorCode::NotSymmetric,
            std::string(who) + ": symmetry defect " + std::to_string(defect));
}

}  // namespace

double symmetry_defect(const Eigen::Ref<const Matrix>& a) {
    if (a.size() == 0) return 0.0;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

Matrix spd_solve(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    require_square_symmetric(a, "spd_solve");
    require(b.rows() == a.rows(), ErrorCode::DimensionMismatch,
            "spd_solve: rhs has " + std::to_string(b.rows()) + " rows, expected " +
                std::to_string(a.rows()));

    Eigen::LLT<Matrix, Eigen::Lower> llt(a);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::NotSPD, "spd_solve: non-positive pivot in Cholesky factorization");
    const auto diag = llt.matrixLLT().diagonal();
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        const double pivot = diag(j) * diag(j);
        if (!(pivot > kPivotCollapse * a(j, j)))
            fail(ErrorCode::NotSPD, "spd_solve: pivot " + std::to_string(j) +
                                        " collapsed to rounding level (rank deficient)");
    }
    return llt.solve(b);
}

SymEig sym_eig(const Eigen::Ref<const Matrix>& s) {
    require_square_symmetric(s, "sym_eig");
    // Only the lower triangle is read; symmetrize so both triangles agree.
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::NoConvergence, "sym_eig: QR iteration cap reached");
    return SymEig{solver.eigenvalues(), solver.eigenvectors()};
}

Matrix psd_sqrt(const Eigen::Ref<const Matrix>& s) {
    const SymEig eig = sym_eig(s);
    const double top = std::max(0.0, eig.values.maxCoeff());
    const double lowest = eig.values.minCoeff();
    if (lowest < -kNegativeEigTol * top)
        fail(ErrorCode::NotPSD, "psd_sqrt: eigenvalue " + std::to_string(lowest) +
                                    " below tolerance for max " + std::to_string(top));
    const Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
    Matrix r = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
    return 0.5 * (r + r.transpose());
}

}  // namespace latentstitch::linalg
