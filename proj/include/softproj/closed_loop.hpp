#pragma once

#include "softproj/control.hpp"
#include "softproj/csv.hpp"
#include "softproj/errors.hpp"
#include "softproj/plant.hpp"
#include "softproj/recursive.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace softproj::control {

/// Raised when the solver of a receding-horizon step does not return an
/// optimal point.
class StepError : public Error {
public:
    StepError(const std::string& what, qp::QpStatus status) : Error(what), status_(status) {}
    qp::QpStatus status() const { return status_; }

private:
    qp::QpStatus status_;
};

/// Sliding buffer of the most recent (u, y) samples.
class IoHistory {
public:
    IoHistory(Index m, Index p, std::size_t capacity);

    /// Last `capacity` samples of u (m x T) and y (p x T).
    static IoHistory from_signals(const Signal& u, const Signal& y, std::size_t capacity);

    void push(const Vector& u, const Vector& y);
    std::size_t size() const { return u_.size(); }

    /// [u_{t-k}..u_{t-1}; y_{t-k}..y_{t-1}] for the last k = T_ini samples.
    Vector w_ini(Index T_ini) const;

    /// Last L samples as a trajectory in control order.
    Vector window(Index T_ini, Index T_f) const;

private:
    Index m_;
    Index p_;
    std::size_t capacity_;
    std::deque<Vector> u_;
    std::deque<Vector> y_;
};

/// Method settings plus whichever model object the method needs: the exact
/// behavior (true_projection), the data matrix (DeePC) or a soft projector
/// (soft methods, or explicit DeePC when no data matrix is set). All model
/// objects are in control order.
struct Controller {
    ControlWeights weights;
    MethodConfig config;
    Box box;
    Vector u_ref;
    Vector y_ref;
    std::optional<Subspace> behavior;
    std::optional<DataMatrix> data;
    std::optional<SoftProjector> projector;
    qp::QpSettings qp_settings;

    ControlSolution solve(const Vector& w_ini_hat) const;
};

struct StepNoise {
    plant::NoiseSource* source = nullptr;
    Vector process_std;
    Vector measurement_std;
    double dither_std = 0.0;  ///< added to the applied input
};

struct StepOutcome {
    Vector u_applied;
    Vector y_measured;
    Vector y_true;
    ControlSolution solution;
};

/// Builds w_ini from `history`, solves, applies the first input to the plant
/// at state `x` and records the measurement. Throws StepError when the QP
/// fails and InsufficientDataError when history holds fewer than T_ini samples.
StepOutcome receding_horizon_step(const plant::PlantModel& model, Vector& x, const Controller& controller,
                                  IoHistory& history, const StepNoise& noise = {});

struct OnlineConfig {
    Controller controller;  ///< controller.projector is replaced by the online one
    Matrix projector_weight;  ///< W of the recursive projector (empty = controller W)
    double epsilon = RecursiveProjector::kDefaultEpsilon;
    long rebase_every = 100;  ///< 0 disables rebasing
    bool adapt = true;        ///< false: the projector is never updated
    long T_sim = 200;

    /// The output reference flips sign every `reference_period` steps (0 = constant).
    long reference_period = 0;

    plant::PlantModel plant_after;  ///< used from `switch_step` on when non-empty
    long switch_step = -1;

    Vector process_std;
    Vector measurement_std;
    double dither_std = 0.0;
    std::uint64_t seed = 0;
};

struct RunRow {
    long t = 0;
    Vector u;
    Vector y;
    double stage_cost = 0.0;
    double cum_cost = 0.0;
    double delta_t = 0.0;
    int solver_iters = 0;
    double drift = 0.0;
    double gram_sigma_min = 0.0;
};

struct RunLog {
    Index m = 0;
    Index p = 0;
    std::vector<RunRow> rows;
    double final_drift = 0.0;

    /// Columns t, u0.., y0.., stage_cost, cum_cost, delta_t, solver_iters, drift_diag.
    csv::Table table() const;
    /// Columns t, gram_sigma_min.
    csv::Table monitor_table() const;

    /// Sum of stage costs over rows with t >= from.
    double cost_from(long from) const;
};

/// Receding-horizon loop with a recursively updated soft projector. The loop
/// starts from the state and the last samples of `initial`, whose data matrix
/// seeds the projector. The stage cost uses the noise-free output.
RunLog online_control_loop(const plant::PlantModel& model, const plant::ExcitationData& initial,
                           const OnlineConfig& config);

}  // namespace softproj::control
