#include "softproj/linalg.hpp"

#include "softproj/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace softproj::linalg {

double asymmetry(const Matrix& m)
{
    if (m.rows() != m.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    return (m - m.transpose()).norm() / std::max(1.0, m.norm());
}

Matrix symmetrize(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

bool is_spd(const Matrix& m)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        return false;
    }
    if (!m.allFinite() || asymmetry(m) > 1e-10) {
        return false;
    }
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) {
        return false;
    }
    // LLT succeeds on some matrices that are only PSD up to rounding; require a
    // strictly positive pivot.
    return llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

void require_spd(const Matrix& m, std::string_view what)
{
    if (!is_spd(m)) {
        throw DefinitenessError(std::string(what) + " must be symmetric positive definite");
    }
}

namespace {

Matrix floored_eigen_inverse(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a));
    const double floor = std::max(1e-14 * std::abs(a.trace()), std::numeric_limits<double>::min());
    Vector inv = eig.eigenvalues().unaryExpr([floor](double v) { return 1.0 / std::max(v, floor); });
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Matrix spd_inverse(const Matrix& a)
{
    if (a.rows() != a.cols()) {
        throw DimensionError("spd_inverse: matrix is not square");
    }
    Eigen::LLT<Matrix> llt(symmetrize(a));
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
        return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
    }
    return floored_eigen_inverse(a);
}

Matrix spd_solve(const Matrix& a, const Matrix& b)
{
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw DimensionError("spd_solve: non-conformal operands");
    }
    Eigen::LLT<Matrix> llt(symmetrize(a));
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
        return llt.solve(b);
    }
    return floored_eigen_inverse(a) * b;
}

Vector singular_values(const Matrix& m)
{
    if (m.size() == 0) {
        return Vector();
    }
    return Eigen::BDCSVD<Matrix>(m).singularValues();
}

double spectral_norm(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    if (m.rows() == m.cols() && asymmetry(m) < 1e-14) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().cwiseAbs().maxCoeff();
    }
    return singular_values(m)(0);
}

double sigma_min(const Matrix& m)
{
    const Vector s = singular_values(m);
    return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

double rank_tolerance(const Vector& sv, Index rows, Index cols)
{
    const double smax = sv.size() == 0 ? 0.0 : sv.maxCoeff();
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * smax;
}

Index numerical_rank(const Matrix& m)
{
    const Vector sv = singular_values(m);
    const double tol = rank_tolerance(sv, m.rows(), m.cols());
    return (sv.array() > tol).count();
}

Matrix sqrt_spd(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw DefinitenessError("sqrt_spd: matrix is not positive definite");
    }
    return eig.operatorSqrt();
}

double condition_number(const Matrix& m)
{
    const Vector sv = singular_values(m);
    if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return sv(0) / sv(sv.size() - 1);
}

Matrix orthonormal_basis(const Matrix& m)
{
    // Pivoting moves the dominant columns first, so the leading r columns of Q
    // span col(m) once r is fixed by the SVD rank decision.
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    const Index r = numerical_rank(m);
    return qr.householderQ() * Matrix::Identity(m.rows(), r);
}

Matrix pseudo_inverse(const Matrix& m)
{
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double tol = rank_tolerance(s, m.rows(), m.cols());
    Vector inv = s.unaryExpr([tol](double v) { return v > tol ? 1.0 / v : 0.0; });
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix leading_left_singular_vectors(const Matrix& m, Index rank)
{
    if (rank < 0 || rank > std::min(m.rows(), m.cols())) {
        throw DimensionError("leading_left_singular_vectors: rank out of range");
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(rank);
}

}  // namespace softproj::linalg
