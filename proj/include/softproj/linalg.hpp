#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace softproj {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Relative symmetry defect ||M - M^T||_F / max(1, ||M||_F).
double asymmetry(const Matrix& m);

Matrix symmetrize(const Matrix& m);

/// True when `m` is square, symmetric to 1e-10 (relative) and Cholesky-factorizable.
bool is_spd(const Matrix& m);

/// Throws DefinitenessError naming `what` unless `m` is SPD.
void require_spd(const Matrix& m, std::string_view what);

/// Inverse of an SPD (or numerically near-singular PSD) matrix. Uses Cholesky
/// and falls back to an eigendecomposition with eigenvalues floored at
/// 1e-14 * trace when the factorization fails.
Matrix spd_inverse(const Matrix& a);

/// Solves a * x = b for SPD `a` with the same fallback as spd_inverse.
Matrix spd_solve(const Matrix& a, const Matrix& b);

Vector singular_values(const Matrix& m);

double spectral_norm(const Matrix& m);

/// Smallest of the min(rows, cols) singular values; 0 for empty matrices.
double sigma_min(const Matrix& m);

/// Rank tolerance max(rows, cols) * eps * sigma_max.
double rank_tolerance(const Vector& singular_values, Index rows, Index cols);

Index numerical_rank(const Matrix& m);

/// Symmetric square root of an SPD matrix.
Matrix sqrt_spd(const Matrix& m);

/// sigma_max / sigma_min.
double condition_number(const Matrix& m);

/// Orthonormal basis of col(m) via QR with column pivoting. The basis has
/// numerical_rank(m) columns.
Matrix orthonormal_basis(const Matrix& m);

/// Moore-Penrose pseudo-inverse with the standard rank tolerance.
Matrix pseudo_inverse(const Matrix& m);

/// Left singular vectors belonging to the `rank` largest singular values.
Matrix leading_left_singular_vectors(const Matrix& m, Index rank);

}  // namespace linalg
}  // namespace softproj
