#include "softproj/behavior.hpp"

#include "softproj/errors.hpp"

#include <numeric>
#include <string>

namespace softproj {

void Signature::validate() const
{
    if (m < 1 || p < 1 || L < 1) {
        throw DimensionError("Signature: m, p and L must be positive");
    }
}

Trajectory stack_trajectory(const Signal& u, const Signal& y)
{
    if (u.cols() != y.cols()) {
        throw DimensionError("stack_trajectory: input and output sequences differ in length (" +
                             std::to_string(u.cols()) + " vs " + std::to_string(y.cols()) + ")");
    }
    Signature sig{u.rows(), y.rows(), u.cols()};
    sig.validate();
    Trajectory t{sig, Vector(sig.rows())};
    // Column-major storage of an m x L signal is exactly [u_1; ...; u_L].
    t.w.head(sig.m * sig.L) = u.reshaped();
    t.w.tail(sig.p * sig.L) = y.reshaped();
    return t;
}

std::vector<Index> control_permutation(const Signature& sig, Index T_ini)
{
    sig.validate();
    if (T_ini < 0 || T_ini > sig.L) {
        throw DimensionError("control_permutation: T_ini outside [0, L]");
    }
    const Index m = sig.m;
    const Index p = sig.p;
    const Index L = sig.L;
    const Index y0 = m * L;
    std::vector<Index> perm;
    perm.reserve(static_cast<std::size_t>(sig.rows()));
    auto push_block = [&](Index t_begin, Index t_end) {
        for (Index t = t_begin; t < t_end; ++t) {
            for (Index i = 0; i < m; ++i) {
                perm.push_back(t * m + i);
            }
        }
        for (Index t = t_begin; t < t_end; ++t) {
            for (Index i = 0; i < p; ++i) {
                perm.push_back(y0 + t * p + i);
            }
        }
    };
    push_block(0, T_ini);
    push_block(T_ini, L);
    return perm;
}

std::vector<Index> invert_permutation(const std::vector<Index>& perm)
{
    std::vector<Index> inv(perm.size(), -1);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const Index r = perm[i];
        if (r < 0 || r >= static_cast<Index>(perm.size()) || inv[static_cast<std::size_t>(r)] != -1) {
            throw DimensionError("invert_permutation: not a bijection");
        }
        inv[static_cast<std::size_t>(r)] = static_cast<Index>(i);
    }
    return inv;
}

Vector permute_rows(const Vector& raw, const std::vector<Index>& perm)
{
    if (raw.size() != static_cast<Index>(perm.size())) {
        throw DimensionError("permute_rows: length mismatch");
    }
    Vector out(raw.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out(static_cast<Index>(i)) = raw(perm[i]);
    }
    return out;
}

Matrix permute_rows(const Matrix& raw, const std::vector<Index>& perm)
{
    if (raw.rows() != static_cast<Index>(perm.size())) {
        throw DimensionError("permute_rows: row count mismatch");
    }
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.row(static_cast<Index>(i)) = raw.row(perm[i]);
    }
    return out;
}

Vector unpermute_rows(const Vector& permuted, const std::vector<Index>& perm)
{
    if (permuted.size() != static_cast<Index>(perm.size())) {
        throw DimensionError("unpermute_rows: length mismatch");
    }
    Vector raw(permuted.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        raw(perm[i]) = permuted(static_cast<Index>(i));
    }
    return raw;
}

Matrix DataMatrix::permuted() const
{
    return permute_rows(H, perm);
}

std::vector<Index> DataMatrix::past_rows() const
{
    const Index n = sig.q() * T_ini;
    return {perm.begin(), perm.begin() + n};
}

std::vector<Index> DataMatrix::future_input_rows() const
{
    const Index start = sig.q() * T_ini;
    const Index n = sig.m * T_f;
    return {perm.begin() + start, perm.begin() + start + n};
}

Matrix DataMatrix::past_and_future_inputs() const
{
    std::vector<Index> rows = past_rows();
    const auto fu = future_input_rows();
    rows.insert(rows.end(), fu.begin(), fu.end());
    Matrix out(static_cast<Index>(rows.size()), H.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = H.row(rows[i]);
    }
    return out;
}

DataMatrix build_data_matrix(const Signal& u, const Signal& y, Index T_ini, Index T_f)
{
    if (u.cols() != y.cols()) {
        throw DimensionError("build_data_matrix: input and output records differ in length");
    }
    if (T_ini < 0 || T_f < 1) {
        throw DimensionError("build_data_matrix: need T_ini >= 0 and T_f >= 1");
    }
    const Index L = T_ini + T_f;
    const Index T = u.cols();
    if (T < L) {
        throw InsufficientDataError("build_data_matrix: " + std::to_string(T) +
                                    " samples are fewer than the window length " + std::to_string(L));
    }
    Signature sig{u.rows(), y.rows(), L};
    sig.validate();
    DataMatrix dm;
    dm.sig = sig;
    dm.T_ini = T_ini;
    dm.T_f = T_f;
    dm.perm = control_permutation(sig, T_ini);
    const Index D = T - L + 1;
    dm.H.resize(sig.rows(), D);
    for (Index j = 0; j < D; ++j) {
        dm.H.block(0, j, sig.m * L, 1) = u.middleCols(j, L).reshaped();
        dm.H.block(sig.m * L, j, sig.p * L, 1) = y.middleCols(j, L).reshaped();
    }
    return dm;
}

Subspace::Subspace(Matrix basis, bool orthonormal) : basis_(std::move(basis)), orthonormal_(orthonormal)
{
    if (basis_.cols() == 0 || basis_.rows() < basis_.cols()) {
        throw RankError("Subspace: basis must have 1..ambient columns");
    }
    if (linalg::numerical_rank(basis_) < basis_.cols()) {
        throw RankError("Subspace: basis is not of full column rank");
    }
    if (orthonormal_) {
        const Matrix gram = basis_.transpose() * basis_;
        if ((gram - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() > 1e-10) {
            throw RankError("Subspace: basis flagged orthonormal but B^T B != I");
        }
    }
}

Subspace Subspace::orthonormalized() const
{
    if (orthonormal_) {
        return *this;
    }
    return Subspace(linalg::orthonormal_basis(basis_), true);
}

Subspace Subspace::permuted(const std::vector<Index>& perm) const
{
    return Subspace(permute_rows(basis_, perm), orthonormal_);
}

Subspace behavior_basis(const Matrix& A, const Matrix& B, const Matrix& C, Index L)
{
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || n == 0) {
        throw DimensionError("behavior_basis: A (n x n), B (n x m), C (p x n) are not conformal");
    }
    const Signature sig{B.cols(), C.rows(), L};
    sig.validate();
    const Index m = sig.m;
    const Index p = sig.p;

    // Trajectory map [u; y] = [[I, 0], [T_u, O]] [u; x0] with O the extended
    // observability matrix and T_u the block-Toeplitz forced response.
    Matrix obs(p * L, n);
    Matrix toeplitz = Matrix::Zero(p * L, m * L);
    Matrix ak = Matrix::Identity(n, n);
    std::vector<Matrix> markov;  // C A^k B
    for (Index k = 0; k < L; ++k) {
        obs.middleRows(k * p, p) = C * ak;
        markov.push_back(C * ak * B);
        ak = ak * A;
    }
    for (Index i = 1; i < L; ++i) {
        for (Index j = 0; j < i; ++j) {
            toeplitz.block(i * p, j * m, p, m) = markov[static_cast<std::size_t>(i - j - 1)];
        }
    }
    Matrix map = Matrix::Zero(sig.rows(), m * L + n);
    map.topLeftCorner(m * L, m * L).setIdentity();
    map.bottomLeftCorner(p * L, m * L) = toeplitz;
    map.bottomRightCorner(p * L, n) = obs;

    const Index expected = m * L + n;
    const Index rank = linalg::numerical_rank(map);
    if (rank < expected) {
        throw RankError("behavior_basis: trajectory map has rank " + std::to_string(rank) + " < mL + n = " +
                        std::to_string(expected) + " (non-minimal realization or L below the lag)");
    }
    return Subspace(linalg::orthonormal_basis(map), true);
}

Matrix orthogonal_projector(const Matrix& U)
{
    if (U.cols() == 0 || linalg::numerical_rank(U) < U.cols()) {
        throw RankError("orthogonal_projector: U is not of full column rank");
    }
    const Matrix gram = U.transpose() * U;
    return linalg::symmetrize(U * linalg::spd_solve(gram, U.transpose()));
}

Matrix weighted_projector(const Subspace& B, const Matrix& W)
{
    if (W.rows() != B.ambient() || W.cols() != B.ambient()) {
        throw DimensionError("weighted_projector: W is not ambient x ambient");
    }
    linalg::require_spd(W, "weighted_projector: W");
    const Matrix& b = B.basis();
    const Matrix inner = b.transpose() * W * b;
    return linalg::symmetrize(b * linalg::spd_solve(inner, b.transpose()));
}

double gap_metric(const Subspace& U1, const Subspace& U2)
{
    if (U1.ambient() != U2.ambient()) {
        throw DimensionError("gap_metric: subspaces live in different ambient spaces");
    }
    if (U1.dim() != U2.dim()) {
        return 1.0;
    }
    const Matrix diff = orthogonal_projector(U1.basis()) - orthogonal_projector(U2.basis());
    return std::min(1.0, linalg::spectral_norm(diff));
}

}  // namespace softproj
