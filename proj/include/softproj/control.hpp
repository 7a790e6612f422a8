#pragma once

#include "softproj/behavior.hpp"
#include "softproj/qp.hpp"
#include "softproj/soft_projection.hpp"

#include <optional>
#include <string>

namespace softproj::control {

/// Q, R, lambda_sigma and the block-diagonal W they induce on a trajectory in
/// control order: lambda_sigma I on w_ini, then R on each future input and Q
/// on each future output.
struct ControlWeights {
    Matrix Q;
    Matrix R;
    double lambda_sigma = 1e6;
    Signature sig;
    Index T_ini = 0;
    Index T_f = 0;
    Matrix W;

    Index ini_size() const { return sig.q() * T_ini; }
    /// Offset of the first future input inside a control-ordered trajectory.
    Index future_offset() const { return ini_size(); }
    Index future_output_offset() const { return ini_size() + sig.m * T_f; }
};

/// Throws DefinitenessError unless Q, R are SPD and lambda_sigma > 0.
ControlWeights make_weights(const Matrix& Q, const Matrix& R, double lambda_sigma, Index T_ini, Index T_f);

/// Stacked target [w_ini_hat; w_ref] in control order.
struct ControlTarget {
    Vector w_ini_hat;
    Vector w_ref;

    Vector stacked() const;
};

/// w_ini_hat is [u_{t-T_ini}..u_{t-1}; y_{t-T_ini}..y_{t-1}]; the reference
/// repeats u_ref and y_ref over the T_f future samples.
ControlTarget make_target(const ControlWeights& weights, const Vector& w_ini_hat, const Vector& u_ref,
                          const Vector& y_ref);

enum class Method { true_projection, deepc_l2, deepc_projected, soft_squared, soft_quadratic };

std::string to_string(Method method);
/// Accepts the names printed by to_string; throws ParameterError otherwise.
Method method_from_string(const std::string& name);

struct MethodConfig {
    Method method = Method::soft_squared;
    double lambda_g = 100.0;
    double delta = 0.1;
    double alpha = 1e6;
    double alpha_hat = 1e5;

    /// Throws ParameterError when a parameter used by `method` is not positive.
    void validate() const;
};

struct ControlSolution {
    Vector w_star;   ///< control order
    Vector u_apply;  ///< first future input
    Vector g_star;   ///< DeePC methods only
    double objective = 0.0;
    Vector sigma_star;  ///< w_ini - w_ini_hat (the eliminated slack)
    qp::QpStatus status = qp::QpStatus::optimal;
    int solver_iterations = 0;
    bool used_qp = false;
};

using Box = std::optional<qp::TrajectoryConstraints>;

/// (w - t)^T W (w - t).
double tracking_cost(const Matrix& W, const Vector& w, const Vector& target);

/// Exact behavior. `behavior` must be in control order. Without a box the
/// solution is P_B^W W t; with a box a QP over w = B z.
ControlSolution solve_true_projection(const Subspace& behavior, const ControlWeights& weights,
                                      const ControlTarget& target, const Box& box = std::nullopt,
                                      const qp::QpSettings& settings = {});

/// DeePC with lambda_g ||g||^2 (deepc_l2) or lambda_g ||(I - Pi) g||^2
/// (deepc_projected). Closed form without a box, QP in g with a box.
ControlSolution solve_deepc(const DataMatrix& data, const ControlWeights& weights, const ControlTarget& target,
                            const MethodConfig& config, const Box& box = std::nullopt,
                            const qp::QpSettings& settings = {});

/// min ||w - t||_W^2 + alpha ||(I - P) w||^2 over w in the box.
ControlSolution solve_soft_squared(const SoftProjector& projector, const ControlWeights& weights,
                                   const ControlTarget& target, double alpha, const Box& box = std::nullopt,
                                   const qp::QpSettings& settings = {});

/// min ||w - t||_W^2 + (alpha_hat / delta) w^T (I - P) w over w in the box.
ControlSolution solve_soft_quadratic(const SoftProjector& projector, const ControlWeights& weights,
                                     const ControlTarget& target, double alpha_hat, const Box& box = std::nullopt,
                                     const qp::QpSettings& settings = {});

/// Unconstrained closed-form maps: w* = M t.
Matrix soft_squared_map(const SoftProjector& projector, const Matrix& W, double alpha);
Matrix soft_quadratic_map(const SoftProjector& projector, const Matrix& W, double alpha_hat);

/// Eigenvalues of the unweighted maps in terms of the singular values of H:
/// (s^2 + d)^2 / ((s^2 + d)^2 + alpha d^2)  and  (s^2 + d) / (s^2 + d + alpha_hat).
double soft_squared_eigenvalue(double sigma, double delta, double alpha);
double soft_quadratic_eigenvalue(double sigma, double delta, double alpha_hat);

}  // namespace softproj::control
