#include "softproj/qp.hpp"

#include "softproj/csv.hpp"
#include "softproj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace softproj::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityFactor = 1e3;
constexpr double kPolishDelta = 1e-7;
constexpr int kPolishRefinements = 5;

double inf_norm(const Vector& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double clamp_scaling(double v)
{
    if (v < kMinScaling) {
        return 1.0;
    }
    return std::min(v, kMaxScaling);
}

/// Solves (Pbar + sigma I + Abar^T diag(rho) Abar) x = b.
class KktSolver {
public:
    virtual ~KktSolver() = default;
    virtual void factor(double sigma, const Vector& rho) = 0;
    virtual Vector solve(const Vector& b) const = 0;
};

class DenseKkt final : public KktSolver {
public:
    DenseKkt(const Matrix& pbar, const Matrix& abar) : pbar_(pbar), abar_(abar) {}

    void factor(double sigma, const Vector& rho) override
    {
        Matrix k = pbar_;
        k.diagonal().array() += sigma;
        if (abar_.rows() > 0) {
            k.noalias() += abar_.transpose() * rho.asDiagonal() * abar_;
        }
        k = 0.5 * (k + k.transpose());
        llt_.compute(k);
        use_ldlt_ = llt_.info() != Eigen::Success;
        if (use_ldlt_) {
            ldlt_.compute(k);
        }
    }

    Vector solve(const Vector& b) const override
    {
        return use_ldlt_ ? Vector(ldlt_.solve(b)) : Vector(llt_.solve(b));
    }

private:
    const Matrix& pbar_;
    const Matrix& abar_;
    Eigen::LLT<Matrix> llt_;
    Eigen::LDLT<Matrix> ldlt_;
    bool use_ldlt_ = false;
};

struct Scaled {
    Matrix P;
    Vector q;
    Matrix A;
    Vector l;
    Vector u;
    Vector D;
    Vector E;
    double c = 1.0;
};

Scaled equilibrate(const QpProblem& prob, int passes)
{
    const Index n = prob.num_variables();
    const Index k = prob.num_constraints();
    Scaled s;
    s.P = prob.P;
    s.q = prob.q;
    s.A = prob.A;
    s.D = Vector::Ones(n);
    s.E = Vector::Ones(k);
    for (int pass = 0; pass < passes; ++pass) {
        Vector dd(n);
        for (Index j = 0; j < n; ++j) {
            double norm = s.P.col(j).cwiseAbs().maxCoeff();
            if (k > 0) {
                norm = std::max(norm, s.A.col(j).cwiseAbs().maxCoeff());
            }
            dd(j) = 1.0 / std::sqrt(clamp_scaling(norm));
        }
        Vector de(k);
        for (Index i = 0; i < k; ++i) {
            de(i) = 1.0 / std::sqrt(clamp_scaling(s.A.row(i).cwiseAbs().maxCoeff()));
        }
        s.P = dd.asDiagonal() * s.P * dd.asDiagonal();
        s.q = dd.cwiseProduct(s.q);
        if (k > 0) {
            s.A = de.asDiagonal() * s.A * dd.asDiagonal();
        }
        s.D = s.D.cwiseProduct(dd);
        s.E = s.E.cwiseProduct(de);

        double mean_col = 0.0;
        for (Index j = 0; j < n; ++j) {
            mean_col += s.P.col(j).cwiseAbs().maxCoeff();
        }
        mean_col /= static_cast<double>(std::max<Index>(n, 1));
        const double cost_norm = std::max(mean_col, inf_norm(s.q));
        const double gamma = 1.0 / clamp_scaling(cost_norm);
        s.P *= gamma;
        s.q *= gamma;
        s.c *= gamma;
    }
    s.l = s.E.cwiseProduct(prob.l);
    s.u = s.E.cwiseProduct(prob.u);
    return s;
}

struct Residuals {
    double prim = 0.0;
    double dual = 0.0;
    double eps_prim = 0.0;
    double eps_dual = 0.0;

    bool converged() const { return prim <= eps_prim && dual <= eps_dual; }
};

Residuals residuals(const Scaled& s, const Vector& x, const Vector& z, const Vector& y, const QpSettings& st)
{
    Residuals r;
    const Vector e_inv = s.E.cwiseInverse();
    const Vector d_inv = s.D.cwiseInverse();
    if (s.A.rows() > 0) {
        const Vector ax = e_inv.cwiseProduct(s.A * x);
        const Vector zu = e_inv.cwiseProduct(z);
        r.prim = inf_norm(ax - zu);
        r.eps_prim = st.eps_abs + st.eps_rel * std::max(inf_norm(ax), inf_norm(zu));
    } else {
        r.eps_prim = st.eps_abs;
    }
    const Vector px = d_inv.cwiseProduct(s.P * x) / s.c;
    const Vector qu = d_inv.cwiseProduct(s.q) / s.c;
    Vector aty = Vector::Zero(x.size());
    if (s.A.rows() > 0) {
        aty = d_inv.cwiseProduct(s.A.transpose() * y) / s.c;
    }
    r.dual = inf_norm(px + qu + aty);
    r.eps_dual = st.eps_abs + st.eps_rel * std::max({inf_norm(px), inf_norm(aty), inf_norm(qu)});
    return r;
}

/// Balances the scaled primal and dual residuals.
double estimate_rho(const Scaled& s, const Vector& x, const Vector& z, const Vector& y, double rho)
{
    constexpr double tiny = 1e-30;
    const Vector ax = s.A * x;
    const Vector px = s.P * x;
    const Vector aty = s.A.transpose() * y;
    const double prim = inf_norm(ax - z) / std::max({inf_norm(ax), inf_norm(z), tiny});
    const double dual = inf_norm(px + s.q + aty) / std::max({inf_norm(px), inf_norm(aty), inf_norm(s.q), tiny});
    const double est = rho * std::sqrt(prim / std::max(dual, tiny));
    return std::clamp(est, kRhoMin, kRhoMax);
}

bool primal_infeasible(const Scaled& s, const Vector& dy, double eps)
{
    const double norm_dy = inf_norm(s.E.cwiseProduct(dy));
    if (norm_dy <= eps) {
        return false;
    }
    const Vector aty = s.D.cwiseInverse().cwiseProduct(s.A.transpose() * dy);
    if (inf_norm(aty) > eps * norm_dy) {
        return false;
    }
    double support = 0.0;
    for (Index i = 0; i < dy.size(); ++i) {
        if (dy(i) > 0.0) {
            support += s.u(i) * dy(i);
        } else if (dy(i) < 0.0) {
            support += s.l(i) * dy(i);
        }
    }
    return support < -eps * norm_dy;
}

Vector clamp_box(const Vector& v, const Vector& lo, const Vector& hi)
{
    return v.cwiseMax(lo).cwiseMin(hi);
}

std::unique_ptr<KktSolver> make_kkt(const Scaled& s)
{
    return std::make_unique<DenseKkt>(s.P, s.A);
}

struct Polished {
    Vector x;
    Vector y;
    bool ok = false;
};

Polished polish(const Scaled& s, KktSolver& kkt, const Vector& z, const Vector& y, const QpSettings& st)
{
    const Index n = s.q.size();
    const Index k = s.A.rows();
    Vector rho_pol = Vector::Zero(k);
    Vector target = Vector::Zero(k);
    std::vector<int> side(static_cast<std::size_t>(k), 0);  // -1 lower, +1 upper, 2 equality
    for (Index i = 0; i < k; ++i) {
        const bool lower = z(i) - s.l(i) < -y(i);
        const bool upper = s.u(i) - z(i) < y(i);
        if (s.l(i) == s.u(i) && std::isfinite(s.l(i))) {
            side[static_cast<std::size_t>(i)] = 2;
            target(i) = s.l(i);
        } else if (lower && std::isfinite(s.l(i))) {
            side[static_cast<std::size_t>(i)] = -1;
            target(i) = s.l(i);
        } else if (upper && std::isfinite(s.u(i))) {
            side[static_cast<std::size_t>(i)] = 1;
            target(i) = s.u(i);
        }
        if (side[static_cast<std::size_t>(i)] != 0) {
            rho_pol(i) = 1.0 / kPolishDelta;
        }
    }
    kkt.factor(kPolishDelta, rho_pol);

    // Regularized KKT [P + dI, A_act^T; A_act, -dI], eliminated for the
    // multipliers, then refined against the exact KKT system.
    Vector x = Vector::Zero(n);
    Vector ya = Vector::Zero(k);
    const Vector active = (rho_pol.array() > 0.0).cast<double>();
    for (int it = 0; it <= kPolishRefinements; ++it) {
        Vector r1 = -s.q - s.P * x;
        if (k > 0) {
            r1 -= s.A.transpose() * ya.cwiseProduct(active);
        }
        Vector r2 = Vector::Zero(k);
        if (k > 0) {
            r2 = (target - s.A * x).cwiseProduct(active);
        }
        Vector rhs = r1;
        if (k > 0) {
            rhs += s.A.transpose() * (r2.cwiseProduct(rho_pol));
        }
        const Vector dx = kkt.solve(rhs);
        Vector dy = Vector::Zero(k);
        if (k > 0) {
            dy = ((s.A * dx) - r2).cwiseProduct(rho_pol);
        }
        x += dx;
        ya += dy;
    }

    Polished out;
    out.x = x;
    out.y = ya.cwiseProduct(active);
    const double tol = st.eps_abs;
    for (Index i = 0; i < k; ++i) {
        const int sd = side[static_cast<std::size_t>(i)];
        if (sd == -1 && out.y(i) > tol) {
            return out;
        }
        if (sd == 1 && out.y(i) < -tol) {
            return out;
        }
    }
    out.ok = true;
    return out;
}

}  // namespace

void QpProblem::validate() const
{
    const Index n = q.size();
    if (P.rows() != n || P.cols() != n) {
        throw DimensionError("QpProblem: P must be n x n");
    }
    if (A.cols() != n && A.rows() > 0) {
        throw DimensionError("QpProblem: A must have n columns");
    }
    if (l.size() != A.rows() || u.size() != A.rows()) {
        throw DimensionError("QpProblem: l and u must have one entry per constraint row");
    }
    for (Index i = 0; i < l.size(); ++i) {
        if (l(i) > u(i) || std::isnan(l(i)) || std::isnan(u(i))) {
            throw BoundsError("QpProblem: lower bound exceeds upper bound in row " + std::to_string(i));
        }
    }
    if (!P.allFinite() || !q.allFinite() || !A.allFinite()) {
        throw DimensionError("QpProblem: non-finite problem data");
    }
    const double pnorm = P.size() ? P.cwiseAbs().maxCoeff() : 0.0;
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, pnorm)) {
        throw DefinitenessError("QpProblem: P is not symmetric");
    }
    if (n > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues()(0);
        const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
        if (lo < -1e-9 * std::max(norm, 1e-300)) {
            throw DefinitenessError("QpProblem: P is not positive semidefinite");
        }
    }
}

double QpProblem::objective(const Vector& x) const
{
    return 0.5 * x.dot(P * x) + q.dot(x);
}

void QpProblem::dump(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    csv::write_matrix(dir / "P.csv", P);
    csv::write_matrix(dir / "q.csv", q);
    csv::write_matrix(dir / "A.csv", A);
    Matrix bounds(l.size(), 2);
    bounds.col(0) = l;
    bounds.col(1) = u;
    csv::write_matrix(dir / "bounds.csv", bounds);
}

std::string to_string(QpStatus status)
{
    switch (status) {
    case QpStatus::optimal:
        return "optimal";
    case QpStatus::max_iter:
        return "max_iter";
    case QpStatus::infeasible:
        return "infeasible";
    }
    return "unknown";
}

QpSolution solve(const QpProblem& problem, double tol_abs, double tol_rel, int max_iter)
{
    QpSettings st;
    st.eps_abs = tol_abs;
    st.eps_rel = tol_rel;
    st.max_iter = max_iter;
    return solve(problem, st);
}

QpSolution solve(const QpProblem& problem, const QpSettings& st)
{
    problem.validate();
    const Index n = problem.num_variables();
    const Index k = problem.num_constraints();
    Scaled s = equilibrate(problem, st.scaling_passes);
    auto kkt = make_kkt(s);

    auto make_rho = [&](double base) {
        Vector r(k);
        for (Index i = 0; i < k; ++i) {
            const bool open = !std::isfinite(problem.l(i)) && !std::isfinite(problem.u(i));
            if (open) {
                r(i) = kRhoMin;
            } else if (problem.l(i) == problem.u(i)) {
                r(i) = kRhoEqualityFactor * base;
            } else {
                r(i) = base;
            }
        }
        return r;
    };
    double rho_base = st.rho;
    Vector rho = make_rho(rho_base);
    kkt->factor(st.sigma, rho);

    Vector x = Vector::Zero(n);
    Vector z = Vector::Zero(k);
    Vector y = Vector::Zero(k);
    if (k > 0) {
        z = clamp_box(z, s.l, s.u);
    }

    QpSolution sol;
    Residuals res;
    bool done = false;
    int iter = 0;
    for (iter = 1; iter <= st.max_iter && !done; ++iter) {
        Vector rhs = st.sigma * x - s.q;
        if (k > 0) {
            rhs += s.A.transpose() * (rho.cwiseProduct(z) - y);
        }
        const Vector x_tilde = kkt->solve(rhs);
        const Vector x_new = st.alpha * x_tilde + (1.0 - st.alpha) * x;
        Vector z_new = z;
        Vector y_new = y;
        if (k > 0) {
            const Vector z_tilde = s.A * x_tilde;
            const Vector z_relax = st.alpha * z_tilde + (1.0 - st.alpha) * z;
            z_new = clamp_box(z_relax + y.cwiseQuotient(rho), s.l, s.u);
            y_new = y + rho.cwiseProduct(z_relax - z_new);
        }

        const bool checkpoint = iter % st.check_every == 0 || iter == st.max_iter;
        if (checkpoint && st.record_merit) {
            const Vector dx = x_new - x;
            double m2 = st.sigma * dx.squaredNorm();
            if (k > 0) {
                const Vector dzeta = rho.cwiseProduct(z_new - z) + (y_new - y);
                m2 += dzeta.cwiseAbs2().cwiseQuotient(rho).sum();
            }
            sol.merit.push_back(std::sqrt(m2));
        }
        const Vector dy = y_new - y;
        x = x_new;
        z = z_new;
        y = y_new;

        if (checkpoint) {
            res = residuals(s, x, z, y, st);
            if (st.adaptive_rho && k > 0 && !res.converged()) {
                const double rho_new = estimate_rho(s, x, z, y, rho_base);
                if (rho_new > st.adaptive_rho_tolerance * rho_base || rho_new * st.adaptive_rho_tolerance < rho_base) {
                    rho_base = rho_new;
                    rho = make_rho(rho_base);
                    kkt->factor(st.sigma, rho);
                }
            }
            if (res.converged()) {
                sol.status = QpStatus::optimal;
                done = true;
            } else if (k > 0 && iter >= st.infeasibility_after && primal_infeasible(s, dy, st.eps_infeasible)) {
                sol.status = QpStatus::infeasible;
                done = true;
            }
        }
    }
    sol.iterations = iter - 1;
    if (!done) {
        res = residuals(s, x, z, y, st);
        sol.status = QpStatus::max_iter;
    }

    if (st.polish && sol.status != QpStatus::infeasible) {
        Polished pol = polish(s, *kkt, z, y, st);
        if (pol.ok) {
            const Vector z_pol = k > 0 ? clamp_box(s.A * pol.x, s.l, s.u) : Vector();
            const Residuals rp = residuals(s, pol.x, z_pol, pol.y, st);
            const bool better = rp.prim <= std::max(res.prim, rp.eps_prim) && rp.dual <= std::max(res.dual, rp.eps_dual);
            if (better) {
                x = pol.x;
                z = z_pol;
                y = pol.y;
                res = rp;
                sol.polished = true;
                if (res.converged()) {
                    sol.status = QpStatus::optimal;
                }
            }
        }
    }

    sol.x = s.D.cwiseProduct(x);
    sol.y = k > 0 ? Vector(s.E.cwiseProduct(y) / s.c) : Vector();
    sol.objective = problem.objective(sol.x);
    sol.primal_residual = res.prim;
    sol.dual_residual = res.dual;
    return sol;
}

TrajectoryConstraints assemble_box_on_trajectory(const Signature& sig, Index T_ini, Index T_f,
                                                 const std::optional<ChannelBox>& u_box,
                                                 const std::optional<ChannelBox>& y_box)
{
    sig.validate();
    if (T_ini + T_f != sig.L) {
        throw DimensionError("assemble_box_on_trajectory: T_ini + T_f must equal L");
    }
    auto check = [](const ChannelBox& b, Index channels, const char* what) {
        if (b.lower.size() != channels || b.upper.size() != channels) {
            throw DimensionError(std::string("assemble_box_on_trajectory: ") + what +
                                 " box does not match the channel count");
        }
        for (Index i = 0; i < channels; ++i) {
            if (b.lower(i) > b.upper(i) || std::isnan(b.lower(i)) || std::isnan(b.upper(i))) {
                throw BoundsError(std::string("assemble_box_on_trajectory: ") + what + " lower bound exceeds upper bound");
            }
        }
    };
    const Index m = sig.m;
    const Index p = sig.p;
    const Index q = sig.q();
    Index k = 0;
    if (u_box) {
        check(*u_box, m, "input");
        k += m * T_f;
    }
    if (y_box) {
        check(*y_box, p, "output");
        k += p * T_f;
    }
    TrajectoryConstraints c;
    c.A = Matrix::Zero(k, sig.rows());
    c.l = Vector(k);
    c.u = Vector(k);
    const Index future = q * T_ini;
    Index row = 0;
    if (u_box) {
        for (Index t = 0; t < T_f; ++t) {
            for (Index i = 0; i < m; ++i, ++row) {
                c.A(row, future + t * m + i) = 1.0;
                c.l(row) = u_box->lower(i);
                c.u(row) = u_box->upper(i);
            }
        }
    }
    if (y_box) {
        for (Index t = 0; t < T_f; ++t) {
            for (Index i = 0; i < p; ++i, ++row) {
                c.A(row, future + m * T_f + t * p + i) = 1.0;
                c.l(row) = y_box->lower(i);
                c.u(row) = y_box->upper(i);
            }
        }
    }
    return c;
}

}  // namespace softproj::qp
