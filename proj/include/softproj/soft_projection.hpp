#pragma once

#include "softproj/behavior.hpp"
#include "softproj/csv.hpp"
#include "softproj/linalg.hpp"

#include <utility>
#include <vector>

namespace softproj {

/// Weighted soft projector P = H (H^T W H + delta I)^{-1} H^T together with
/// the qL x qL inverse G^{-1} = (W H H^T W / delta + W)^{-1}, so that
/// P = W^{-1} - G^{-1}.
struct SoftProjector {
    Matrix P;
    double delta = 0.0;
    Matrix W;
    Matrix W_inv;
    Matrix gram_inv_cache;

    Index dim() const { return P.rows(); }

    /// I - P evaluated as (I - W^{-1}) + G^{-1}. For W = I this is exactly the
    /// cached inverse and avoids the cancellation in I - P when delta is small.
    Matrix complement() const;

    /// Eigenvalues of W^{1/2} P W^{1/2}, ascending. All lie in [0, 1).
    Vector weighted_spectrum() const;
};

/// Inverts the D x D matrix H^T W H + delta I.
SoftProjector soft_projector_direct(const Matrix& H, const Matrix& W, double delta);

/// Inverts only the qL x qL matrix W H H^T W / delta + W.
SoftProjector soft_projector_covariance(const Matrix& H, const Matrix& W, double delta);

/// Covariance form from a precomputed Gram matrix H H^T.
SoftProjector soft_projector_from_gram(const Matrix& HHt, const Matrix& W, double delta);

/// Direct form when D <= 2 qL, covariance form otherwise.
SoftProjector soft_projector(const Matrix& H, const Matrix& W, double delta);

/// Orthogonal projector onto the row space of the stacked [Z_p; U_f] rows (D x D).
Matrix regularizer_pi(const DataMatrix& data);

/// H (H^T H + delta (I - Pi))^{-1} H^T with H in the control row ordering.
/// Vectors in the row space of [Z_p; U_f] are not shrunk.
Matrix projected_soft_projector(const DataMatrix& data, double delta);

/// Synthetic split of a data matrix into signal B S and noise E.
struct NoiseDecomposition {
    Matrix B;  ///< orthonormal qL x d
    Matrix S;  ///< d x D
    Matrix E;  ///< qL x D

    NoiseDecomposition(Matrix basis, Matrix signal, Matrix noise);

    Matrix data() const { return B * S + E; }
};

/// Bias/variance bound on ||P_soft^W - P_B^W||_2.
struct BoundReport {
    double delta = 0.0;
    double gamma = 0.0;
    double bias_term = 0.0;
    double variance_term = 0.0;
    double kappa_W = 0.0;
    double sigma_min_WH = 0.0;
    double sigma_min_signal = 0.0;
};

BoundReport error_bound(const NoiseDecomposition& decomp, const Matrix& W, double delta);

/// Closed-form unweighted bound
/// (2||S|| ||E|| + ||E||^2) / (sigma_min^2(H) + delta) + delta / (sigma_min^2(S) + delta).
double unweighted_error_bound(const NoiseDecomposition& decomp, double delta);

/// gamma * ||W target||: bound on the distance between the unconstrained
/// data-driven and exact projection solutions.
double solution_error_bound(const BoundReport& report, const Matrix& W, const Vector& target);

/// Pairs (sigma_i, sigma_i^2 / (sigma_i^2 + delta)) sorted by decreasing sigma_i.
std::vector<std::pair<double, double>> eigen_filter(const Matrix& H, double delta);

/// CSV schema: delta, variance_term, bias_term, gamma, empirical_gap.
csv::Table bound_table();
void append_bound_row(csv::Table& table, const BoundReport& report, double empirical_gap);

}  // namespace softproj
