#include "softproj/soft_projection.hpp"

#include "softproj/errors.hpp"
#include "softproj/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace softproj {

namespace {

void check_inputs(const Matrix& H, const Matrix& W, double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ParameterError("soft projector: delta must be positive and finite");
    }
    if (W.rows() != H.rows() || W.cols() != H.rows()) {
        throw DimensionError("soft projector: W must be qL x qL with qL = rows(H)");
    }
    linalg::require_spd(W, "soft projector: W");
}

}  // namespace

Matrix SoftProjector::complement() const
{
    const Index n = dim();
    return linalg::symmetrize((Matrix::Identity(n, n) - W_inv) + gram_inv_cache);
}

Vector SoftProjector::weighted_spectrum() const
{
    const Matrix half = linalg::sqrt_spd(W);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(linalg::symmetrize(half * P * half), Eigen::EigenvaluesOnly);
    return eig.eigenvalues();
}

SoftProjector soft_projector_direct(const Matrix& H, const Matrix& W, double delta)
{
    check_inputs(H, W, delta);
    Matrix inner = H.transpose() * W * H;
    inner.diagonal().array() += delta;
    SoftProjector out;
    out.delta = delta;
    out.W = W;
    out.W_inv = linalg::spd_inverse(W);
    out.P = linalg::symmetrize(H * linalg::spd_solve(inner, H.transpose()));
    // W^{-1} - P cancels badly for small delta; invert G directly instead.
    out.gram_inv_cache = linalg::spd_inverse(linalg::symmetrize(W * (H * H.transpose()) * W / delta + W));
    return out;
}

SoftProjector soft_projector_from_gram(const Matrix& HHt, const Matrix& W, double delta)
{
    if (HHt.rows() != HHt.cols()) {
        throw DimensionError("soft_projector_from_gram: Gram matrix must be square");
    }
    check_inputs(Matrix(HHt.rows(), 0), W, delta);
    SoftProjector out;
    out.delta = delta;
    out.W = W;
    out.W_inv = linalg::spd_inverse(W);
    const Matrix G = W * HHt * W / delta + W;
    out.gram_inv_cache = linalg::spd_inverse(G);
    out.P = linalg::symmetrize(out.W_inv - out.gram_inv_cache);
    return out;
}

SoftProjector soft_projector_covariance(const Matrix& H, const Matrix& W, double delta)
{
    check_inputs(H, W, delta);
    return soft_projector_from_gram(kernels::gram(H), W, delta);
}

SoftProjector soft_projector(const Matrix& H, const Matrix& W, double delta)
{
    if (H.cols() <= 2 * H.rows()) {
        return soft_projector_direct(H, W, delta);
    }
    return soft_projector_covariance(H, W, delta);
}

Matrix regularizer_pi(const DataMatrix& data)
{
    if (data.H.rows() != data.sig.rows() || static_cast<Index>(data.perm.size()) != data.sig.rows()) {
        throw DimensionError("regularizer_pi: data matrix partition is inconsistent");
    }
    const Matrix F = data.past_and_future_inputs();
    return linalg::symmetrize(linalg::pseudo_inverse(F) * F);
}

Matrix projected_soft_projector(const DataMatrix& data, double delta)
{
    if (!(delta > 0.0)) {
        throw ParameterError("projected_soft_projector: delta must be positive");
    }
    const Matrix H = data.permuted();
    const Index D = H.cols();
    const Matrix pi = regularizer_pi(data);
    Matrix inner = H.transpose() * H + delta * (Matrix::Identity(D, D) - pi);
    inner = linalg::symmetrize(inner);

    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
        // Row-space inclusion holds only up to rounding; retry with jitter.
        const double jitter = 1e-12 * inner.trace();
        inner.diagonal().array() += jitter;
        llt.compute(inner);
        if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
            throw ConditioningError("projected_soft_projector: H^T H + delta (I - Pi) is numerically singular");
        }
    }
    return linalg::symmetrize(H * llt.solve(H.transpose()));
}

NoiseDecomposition::NoiseDecomposition(Matrix basis, Matrix signal, Matrix noise)
    : B(std::move(basis)), S(std::move(signal)), E(std::move(noise))
{
    if (S.rows() != B.cols() || E.rows() != B.rows() || E.cols() != S.cols()) {
        throw DimensionError("NoiseDecomposition: B (qL x d), S (d x D), E (qL x D) are not conformal");
    }
    const Matrix btb = B.transpose() * B;
    if ((btb - Matrix::Identity(B.cols(), B.cols())).cwiseAbs().maxCoeff() > 1e-10) {
        throw RankError("NoiseDecomposition: B must be orthonormal");
    }
}

namespace {

// Smallest singular value of W^{1/2} H over all qL rows (0 when D < qL).
double sigma_min_rows(const Matrix& m)
{
    if (m.cols() < m.rows()) {
        return 0.0;
    }
    return linalg::sigma_min(m);
}

}  // namespace

BoundReport error_bound(const NoiseDecomposition& decomp, const Matrix& W, double delta)
{
    if (!(delta > 0.0)) {
        throw ParameterError("error_bound: delta must be positive");
    }
    const Index n = decomp.B.rows();
    if (W.rows() != n || W.cols() != n) {
        throw DimensionError("error_bound: W must be qL x qL");
    }
    linalg::require_spd(W, "error_bound: W");
    if (linalg::numerical_rank(decomp.S) < std::min(decomp.S.rows(), decomp.S.cols()) ||
        decomp.S.cols() < decomp.S.rows()) {
        throw RankError("error_bound: signal coefficient matrix S must have full row rank");
    }

    const Matrix H = decomp.data();
    const Matrix half = linalg::sqrt_spd(W);
    const double norm_s = linalg::spectral_norm(decomp.S);
    const double norm_e = linalg::spectral_norm(decomp.E);

    BoundReport r;
    r.delta = delta;
    r.kappa_W = linalg::condition_number(W);
    r.sigma_min_WH = sigma_min_rows(half * H);
    r.sigma_min_signal = linalg::sigma_min(decomp.B.transpose() * W * decomp.B * decomp.S * decomp.S.transpose());
    r.variance_term = r.kappa_W * (2.0 * norm_s * norm_e + norm_e * norm_e) /
                      (r.sigma_min_WH * r.sigma_min_WH + delta);
    r.bias_term = delta * linalg::spectral_norm(linalg::spd_inverse(W)) / (r.sigma_min_signal + delta);
    r.gamma = r.variance_term + r.bias_term;
    return r;
}

double unweighted_error_bound(const NoiseDecomposition& decomp, double delta)
{
    const Matrix H = decomp.data();
    const double norm_s = linalg::spectral_norm(decomp.S);
    const double norm_e = linalg::spectral_norm(decomp.E);
    const double smin_h = sigma_min_rows(H);
    const double smin_s = linalg::sigma_min(decomp.S);
    return (2.0 * norm_s * norm_e + norm_e * norm_e) / (smin_h * smin_h + delta) +
           delta / (smin_s * smin_s + delta);
}

double solution_error_bound(const BoundReport& report, const Matrix& W, const Vector& target)
{
    if (W.cols() != target.size()) {
        throw DimensionError("solution_error_bound: W and target are not conformal");
    }
    return report.gamma * (W * target).norm();
}

std::vector<std::pair<double, double>> eigen_filter(const Matrix& H, double delta)
{
    if (delta < 0.0) {
        throw ParameterError("eigen_filter: delta must be non-negative");
    }
    const Vector sv = linalg::singular_values(H);  // descending
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(sv.size()));
    for (Index i = 0; i < sv.size(); ++i) {
        const double s2 = sv(i) * sv(i);
        const double denom = s2 + delta;
        out.emplace_back(sv(i), denom > 0.0 ? s2 / denom : 0.0);
    }
    return out;
}

csv::Table bound_table()
{
    return csv::Table({"delta", "variance_term", "bias_term", "gamma", "empirical_gap"});
}

void append_bound_row(csv::Table& table, const BoundReport& report, double empirical_gap)
{
    table.row(std::vector<double>{report.delta, report.variance_term, report.bias_term, report.gamma, empirical_gap});
}

}  // namespace softproj
