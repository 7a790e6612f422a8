#pragma once

#include "softproj/linalg.hpp"

#include <vector>

namespace softproj {

/// Channel counts and window length of a stacked input/output trajectory.
struct Signature {
    Index m = 1;  ///< inputs
    Index p = 1;  ///< outputs
    Index L = 1;  ///< window length in samples

    Index q() const { return m + p; }
    Index rows() const { return q() * L; }

    /// Throws DimensionError when a count is not positive.
    void validate() const;

    bool operator==(const Signature&) const = default;
};

/// A length-L trajectory stored in the raw stacking order
/// [u_1; ...; u_L; y_1; ...; y_L].
struct Trajectory {
    Signature sig;
    Vector w;
};

/// Signals are stored channels x samples: column k is the sample at time k.
using Signal = Matrix;

/// Stacks L input samples (m x L) and L output samples (p x L).
Trajectory stack_trajectory(const Signal& u, const Signal& y);

/// Row map from the raw stacking order to the control ordering
/// [u_1..u_Tini, y_1..y_Tini, u_Tini+1..u_L, y_Tini+1..y_L].
/// Entry i is the raw row that lands at position i.
std::vector<Index> control_permutation(const Signature& sig, Index T_ini);

std::vector<Index> invert_permutation(const std::vector<Index>& perm);

/// out(i) = raw(perm[i]).
Vector permute_rows(const Vector& raw, const std::vector<Index>& perm);
Matrix permute_rows(const Matrix& raw, const std::vector<Index>& perm);

/// Inverse of permute_rows.
Vector unpermute_rows(const Vector& permuted, const std::vector<Index>& perm);

/// Sliding-window data matrix. H keeps the raw stacking order; `perm` maps it
/// to the control ordering without touching H.
struct DataMatrix {
    Signature sig;
    Matrix H;
    Index T_ini = 0;
    Index T_f = 0;
    std::vector<Index> perm;

    Index D() const { return H.cols(); }

    /// H with rows in the control ordering.
    Matrix permuted() const;

    /// Raw row indices of the w_ini block (Z_p), in control order.
    std::vector<Index> past_rows() const;
    /// Raw row indices of the future inputs (U_f), in control order.
    std::vector<Index> future_input_rows() const;

    /// The stacked [Z_p; U_f] rows of H.
    Matrix past_and_future_inputs() const;
};

/// Builds the qL x (T - L + 1) data matrix from u (m x T) and y (p x T).
DataMatrix build_data_matrix(const Signal& u, const Signal& y, Index T_ini, Index T_f);

/// Column basis of a linear subspace of R^ambient.
class Subspace {
public:
    /// Throws RankError if `basis` does not have full column rank.
    explicit Subspace(Matrix basis, bool orthonormal = false);

    const Matrix& basis() const { return basis_; }
    bool orthonormal() const { return orthonormal_; }
    Index dim() const { return basis_.cols(); }
    Index ambient() const { return basis_.rows(); }

    /// Same subspace with an orthonormal basis.
    Subspace orthonormalized() const;

    /// Same subspace with rows reordered by permute_rows.
    Subspace permuted(const std::vector<Index>& perm) const;

private:
    Matrix basis_;
    bool orthonormal_;
};

/// Orthonormal basis of the length-L behavior of x+ = A x + B u, y = C x.
/// The basis is in the raw stacking order and has dimension mL + n; a smaller
/// rank (non-minimal realization or L below the lag) raises RankError.
Subspace behavior_basis(const Matrix& A, const Matrix& B, const Matrix& C, Index L);

/// P_U = U (U^T U)^{-1} U^T.
Matrix orthogonal_projector(const Matrix& U);

/// P_B^W = B (B^T W B)^{-1} B^T.
Matrix weighted_projector(const Subspace& B, const Matrix& W);

/// ||P_U1 - P_U2||_2; 1 when the dimensions differ.
double gap_metric(const Subspace& U1, const Subspace& U2);

}  // namespace softproj
