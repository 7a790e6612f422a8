#pragma once

#include "softproj/behavior.hpp"
#include "softproj/linalg.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace softproj::qp {

/// min 1/2 x^T P x + q^T x  subject to  l <= A x <= u.
struct QpProblem {
    Matrix P;
    Vector q;
    Matrix A;
    Vector l;
    Vector u;

    Index num_variables() const { return q.size(); }
    Index num_constraints() const { return A.rows(); }

    /// Throws DimensionError, BoundsError (l > u) or DefinitenessError
    /// (P not symmetric PSD).
    void validate() const;

    double objective(const Vector& x) const;

    /// Writes P.csv, q.csv, A.csv, bounds.csv (columns l,u) into `dir`.
    void dump(const std::filesystem::path& dir) const;
};

enum class QpStatus { optimal, max_iter, infeasible };

std::string to_string(QpStatus status);

struct QpSettings {
    double rho = 1.0;
    double sigma = 1e-6;
    double alpha = 1.6;
    int scaling_passes = 3;
    double eps_abs = 1e-8;
    double eps_rel = 1e-6;
    double eps_infeasible = 1e-6;
    int max_iter = 20000;
    int check_every = 25;
    int infeasibility_after = 1000;
    bool polish = true;
    bool record_merit = false;
    /// Rescale rho at checkpoints when the primal/dual residual balance is
    /// off by more than adaptive_rho_tolerance.
    bool adaptive_rho = true;
    double adaptive_rho_tolerance = 5.0;
};

struct QpSolution {
    Vector x;
    Vector y;  ///< constraint multipliers
    double objective = 0.0;
    QpStatus status = QpStatus::max_iter;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    bool polished = false;
    /// Fixed-point residual of the splitting iteration at every checkpoint
    /// (only when QpSettings::record_merit is set).
    std::vector<double> merit;
};

/// Operator-splitting (ADMM) solver with Ruiz equilibration and optional
/// active-set polishing.
QpSolution solve(const QpProblem& problem, const QpSettings& settings = {});

/// Convenience overload with the (tol_abs, tol_rel, max_iter) triple.
QpSolution solve(const QpProblem& problem, double tol_abs, double tol_rel, int max_iter);

/// Per-channel box; infinite entries leave that side open.
struct ChannelBox {
    Vector lower;
    Vector upper;
};

/// Box constraints selecting the w_f rows of a trajectory in control order.
struct TrajectoryConstraints {
    Matrix A;  ///< k x qL selector
    Vector l;
    Vector u;

    Index rows() const { return A.rows(); }
};

/// Rows for every future input (when u_box is set) and every future output
/// (when y_box is set); w_ini rows are never constrained. Throws BoundsError
/// if any lower bound exceeds its upper bound.
TrajectoryConstraints assemble_box_on_trajectory(const Signature& sig, Index T_ini, Index T_f,
                                                 const std::optional<ChannelBox>& u_box,
                                                 const std::optional<ChannelBox>& y_box);

}  // namespace softproj::qp
