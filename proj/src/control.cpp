#include "softproj/control.hpp"

#include "softproj/errors.hpp"
#include "softproj/kernels.hpp"

#include <cmath>

namespace softproj::control {

namespace {

void check_box(const Box& box, Index dim)
{
    if (box && box->rows() > 0 && box->A.cols() != dim) {
        throw DimensionError("control: box constraints do not match the trajectory dimension");
    }
}

bool has_rows(const Box& box)
{
    return box && box->rows() > 0;
}

void check_target(const ControlWeights& weights, const ControlTarget& target)
{
    if (target.w_ini_hat.size() != weights.ini_size() ||
        target.w_ini_hat.size() + target.w_ref.size() != weights.W.rows()) {
        throw DimensionError("control: target does not match the weight matrix");
    }
}

void finish(ControlSolution& sol, const ControlWeights& weights, const ControlTarget& target)
{
    sol.u_apply = sol.w_star.segment(weights.future_offset(), weights.sig.m);
    sol.sigma_star = sol.w_star.head(weights.ini_size()) - target.w_ini_hat;
}

qp::QpProblem box_problem(const Matrix& P, const Vector& q, const Box& box)
{
    qp::QpProblem prob;
    prob.P = P;
    prob.q = q;
    if (has_rows(box)) {
        prob.A = box->A;
        prob.l = box->l;
        prob.u = box->u;
    } else {
        prob.A = Matrix(0, q.size());
        prob.l = Vector(0);
        prob.u = Vector(0);
    }
    return prob;
}

void take_qp(ControlSolution& sol, const qp::QpSolution& res)
{
    sol.used_qp = true;
    sol.status = res.status;
    sol.solver_iterations = res.iterations;
}

Vector solve_symmetric(const Matrix& a, const Vector& b, const char* what)
{
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw ConditioningError(std::string(what) + ": factorization failed");
    }
    Vector x = ldlt.solve(b);
    if (!x.allFinite()) {
        throw ConditioningError(std::string(what) + ": system is singular");
    }
    return x;
}

}  // namespace

ControlWeights make_weights(const Matrix& Q, const Matrix& R, double lambda_sigma, Index T_ini, Index T_f)
{
    linalg::require_spd(Q, "Q");
    linalg::require_spd(R, "R");
    if (!(lambda_sigma > 0.0)) {
        throw DefinitenessError("make_weights: lambda_sigma must be positive");
    }
    if (T_ini < 1 || T_f < 1) {
        throw DimensionError("make_weights: T_ini and T_f must be positive");
    }
    ControlWeights w;
    w.Q = Q;
    w.R = R;
    w.lambda_sigma = lambda_sigma;
    w.sig = Signature{R.rows(), Q.rows(), T_ini + T_f};
    w.T_ini = T_ini;
    w.T_f = T_f;
    const Index m = w.sig.m;
    const Index p = w.sig.p;
    w.W = Matrix::Zero(w.sig.rows(), w.sig.rows());
    w.W.topLeftCorner(w.ini_size(), w.ini_size()).diagonal().setConstant(lambda_sigma);
    for (Index k = 0; k < T_f; ++k) {
        const Index iu = w.future_offset() + k * m;
        w.W.block(iu, iu, m, m) = R;
        const Index iy = w.future_output_offset() + k * p;
        w.W.block(iy, iy, p, p) = Q;
    }
    return w;
}

Vector ControlTarget::stacked() const
{
    Vector t(w_ini_hat.size() + w_ref.size());
    t << w_ini_hat, w_ref;
    return t;
}

ControlTarget make_target(const ControlWeights& weights, const Vector& w_ini_hat, const Vector& u_ref,
                          const Vector& y_ref)
{
    if (w_ini_hat.size() != weights.ini_size()) {
        throw DimensionError("make_target: w_ini_hat must have q * T_ini entries");
    }
    if (u_ref.size() != weights.sig.m || y_ref.size() != weights.sig.p) {
        throw DimensionError("make_target: u_ref needs m entries and y_ref p entries");
    }
    ControlTarget t;
    t.w_ini_hat = w_ini_hat;
    t.w_ref.resize(weights.sig.q() * weights.T_f);
    const Index m = weights.sig.m;
    const Index p = weights.sig.p;
    for (Index k = 0; k < weights.T_f; ++k) {
        t.w_ref.segment(k * m, m) = u_ref;
        t.w_ref.segment(m * weights.T_f + k * p, p) = y_ref;
    }
    return t;
}

std::string to_string(Method method)
{
    switch (method) {
    case Method::true_projection: return "true_projection";
    case Method::deepc_l2: return "deepc_l2";
    case Method::deepc_projected: return "deepc_projected";
    case Method::soft_squared: return "soft_squared";
    case Method::soft_quadratic: return "soft_quadratic";
    }
    return "unknown";
}

Method method_from_string(const std::string& name)
{
    for (Method m : {Method::true_projection, Method::deepc_l2, Method::deepc_projected, Method::soft_squared,
                     Method::soft_quadratic}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ParameterError("unknown method '" + name + "'");
}

void MethodConfig::validate() const
{
    switch (method) {
    case Method::true_projection: break;
    case Method::deepc_l2:
    case Method::deepc_projected:
        if (!(lambda_g > 0.0)) throw ParameterError("MethodConfig: lambda_g must be positive");
        break;
    case Method::soft_squared:
        if (!(delta > 0.0)) throw ParameterError("MethodConfig: delta must be positive");
        if (!(alpha > 0.0)) throw ParameterError("MethodConfig: alpha must be positive");
        break;
    case Method::soft_quadratic:
        if (!(delta > 0.0)) throw ParameterError("MethodConfig: delta must be positive");
        if (!(alpha_hat > 0.0)) throw ParameterError("MethodConfig: alpha_hat must be positive");
        break;
    }
}

double tracking_cost(const Matrix& W, const Vector& w, const Vector& target)
{
    const Vector e = w - target;
    return e.dot(W * e);
}

ControlSolution solve_true_projection(const Subspace& behavior, const ControlWeights& weights,
                                      const ControlTarget& target, const Box& box, const qp::QpSettings& settings)
{
    check_target(weights, target);
    if (behavior.ambient() != weights.W.rows()) {
        throw DimensionError("solve_true_projection: behavior basis does not match W");
    }
    check_box(box, weights.W.rows());
    const Matrix& B = behavior.basis();
    const Vector t = target.stacked();
    const Matrix BtW = B.transpose() * weights.W;
    const Matrix gram = linalg::symmetrize(BtW * B);
    ControlSolution sol;
    if (!has_rows(box)) {
        sol.w_star = B * linalg::spd_solve(gram, BtW * t);
    } else {
        qp::QpProblem prob = box_problem(2.0 * gram, -2.0 * (BtW * t), box);
        prob.A = box->A * B;
        const qp::QpSolution res = qp::solve(prob, settings);
        take_qp(sol, res);
        sol.w_star = B * res.x;
    }
    sol.objective = tracking_cost(weights.W, sol.w_star, t);
    finish(sol, weights, target);
    return sol;
}

ControlSolution solve_deepc(const DataMatrix& data, const ControlWeights& weights, const ControlTarget& target,
                            const MethodConfig& config, const Box& box, const qp::QpSettings& settings)
{
    config.validate();
    if (config.method != Method::deepc_l2 && config.method != Method::deepc_projected) {
        throw ParameterError("solve_deepc: method must be deepc_l2 or deepc_projected");
    }
    check_target(weights, target);
    if (data.sig.rows() != weights.W.rows() || data.T_ini != weights.T_ini) {
        throw DimensionError("solve_deepc: data matrix layout does not match the weights");
    }
    check_box(box, weights.W.rows());

    const Matrix H = data.permuted();
    const Index n = H.rows();
    const Index D = H.cols();
    const double lam = config.lambda_g;
    const bool projected = config.method == Method::deepc_projected;
    const Vector t = target.stacked();
    const Vector Wt = weights.W * t;

    // The [Z_p; U_f] rows are the leading rows in control order.
    const Index r = weights.ini_size() + weights.sig.m * weights.T_f;
    Matrix K_pinv;
    if (projected) {
        K_pinv = linalg::pseudo_inverse(linalg::symmetrize(H.topRows(r) * H.topRows(r).transpose()));
    }
    auto reg_value = [&](const Vector& g) {
        if (!projected) {
            return lam * g.squaredNorm();
        }
        const Vector fg = H.topRows(r) * g;
        return lam * (g.squaredNorm() - fg.dot(K_pinv * fg));
    };

    // H^T M H + lam I is the g-space Hessian (halved), with M = W for the
    // plain penalty and W - lam S^T K^+ S for the projected one.
    Matrix M = weights.W;
    if (projected) {
        M.topLeftCorner(r, r) -= lam * K_pinv;
    }

    ControlSolution sol;
    if (!has_rows(box)) {
        if (D <= 2 * n) {
            const Matrix hess = linalg::symmetrize(H.transpose() * M * H) + lam * Matrix::Identity(D, D);
            sol.g_star = solve_symmetric(hess, H.transpose() * Wt, "solve_deepc");
        } else {
            const Matrix gram = kernels::gram(H);
            Matrix small = M * gram;
            small.diagonal().array() += lam;
            Eigen::PartialPivLU<Matrix> lu(small);
            sol.g_star = H.transpose() * lu.solve(Wt);
        }
    } else {
        // Both regularizers vanish on ker(H) without touching H g, so the
        // optimal g lies in row(H). Parameterize g = V b with the right
        // singular vectors V = H^T U S^{-1} and solve an r-dimensional QP.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(kernels::gram(H));
        const Vector s2 = eig.eigenvalues().cwiseMax(0.0);
        const Vector sv = s2.cwiseSqrt();
        const double tol = linalg::rank_tolerance(sv, n, D);
        Index first = 0;
        while (first < n && sv(first) <= tol) ++first;
        const Index rk = n - first;
        if (rk == 0) {
            throw RankError("solve_deepc: data matrix is zero");
        }
        const Matrix US = eig.eigenvectors().rightCols(rk) * sv.tail(rk).asDiagonal();  // H V
        Matrix hess = linalg::symmetrize(US.transpose() * weights.W * US);
        hess.diagonal().array() += lam;
        if (projected) {
            const Matrix FV = US.topRows(r);
            hess -= lam * linalg::symmetrize(FV.transpose() * K_pinv * FV);
        }
        qp::QpProblem prob = box_problem(2.0 * linalg::symmetrize(hess), -2.0 * (US.transpose() * Wt), box);
        prob.A = box->A * US;
        const qp::QpSolution res = qp::solve(prob, settings);
        take_qp(sol, res);
        const Matrix V = H.transpose() * eig.eigenvectors().rightCols(rk) * sv.tail(rk).cwiseInverse().asDiagonal();
        sol.g_star = V * res.x;
    }
    sol.w_star = H * sol.g_star;
    sol.objective = tracking_cost(weights.W, sol.w_star, t) + reg_value(sol.g_star);
    finish(sol, weights, target);
    return sol;
}

ControlSolution solve_soft_squared(const SoftProjector& projector, const ControlWeights& weights,
                                   const ControlTarget& target, double alpha, const Box& box,
                                   const qp::QpSettings& settings)
{
    if (!(alpha > 0.0)) {
        throw ParameterError("solve_soft_squared: alpha must be positive");
    }
    check_target(weights, target);
    if (projector.dim() != weights.W.rows()) {
        throw DimensionError("solve_soft_squared: projector does not match W");
    }
    check_box(box, weights.W.rows());
    const Vector t = target.stacked();
    const Matrix C = projector.complement();
    const Matrix hess = linalg::symmetrize(weights.W + alpha * C.transpose() * C);
    ControlSolution sol;
    if (!has_rows(box)) {
        sol.w_star = linalg::spd_solve(hess, weights.W * t);
    } else {
        const qp::QpSolution res = qp::solve(box_problem(2.0 * hess, -2.0 * (weights.W * t), box), settings);
        take_qp(sol, res);
        sol.w_star = res.x;
    }
    sol.objective = tracking_cost(weights.W, sol.w_star, t) + alpha * (C * sol.w_star).squaredNorm();
    finish(sol, weights, target);
    return sol;
}

ControlSolution solve_soft_quadratic(const SoftProjector& projector, const ControlWeights& weights,
                                     const ControlTarget& target, double alpha_hat, const Box& box,
                                     const qp::QpSettings& settings)
{
    if (!(alpha_hat > 0.0)) {
        throw ParameterError("solve_soft_quadratic: alpha_hat must be positive");
    }
    check_target(weights, target);
    if (projector.dim() != weights.W.rows()) {
        throw DimensionError("solve_soft_quadratic: projector does not match W");
    }
    check_box(box, weights.W.rows());
    const Vector t = target.stacked();
    const double c = alpha_hat / projector.delta;
    const Matrix C = linalg::symmetrize(projector.complement());
    const Matrix hess = linalg::symmetrize(weights.W + c * C);
    ControlSolution sol;
    if (!has_rows(box)) {
        sol.w_star = solve_symmetric(hess, weights.W * t, "solve_soft_quadratic");
    } else {
        const qp::QpSolution res = qp::solve(box_problem(2.0 * hess, -2.0 * (weights.W * t), box), settings);
        take_qp(sol, res);
        sol.w_star = res.x;
    }
    sol.objective = tracking_cost(weights.W, sol.w_star, t) + c * sol.w_star.dot(C * sol.w_star);
    finish(sol, weights, target);
    return sol;
}

Matrix soft_squared_map(const SoftProjector& projector, const Matrix& W, double alpha)
{
    const Matrix C = projector.complement();
    return linalg::spd_solve(linalg::symmetrize(W + alpha * C.transpose() * C), W);
}

Matrix soft_quadratic_map(const SoftProjector& projector, const Matrix& W, double alpha_hat)
{
    const Matrix hess = linalg::symmetrize(W + (alpha_hat / projector.delta) * projector.complement());
    Eigen::LDLT<Matrix> ldlt(hess);
    return ldlt.solve(W);
}

double soft_squared_eigenvalue(double sigma, double delta, double alpha)
{
    const double s = sigma * sigma + delta;
    return s * s / (s * s + alpha * delta * delta);
}

double soft_quadratic_eigenvalue(double sigma, double delta, double alpha_hat)
{
    const double s = sigma * sigma + delta;
    return s / (s + alpha_hat);
}

}  // namespace softproj::control
