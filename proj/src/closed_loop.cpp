#include "softproj/closed_loop.hpp"

#include <cmath>

namespace softproj::control {

IoHistory::IoHistory(Index m, Index p, std::size_t capacity) : m_(m), p_(p), capacity_(capacity)
{
    if (m < 1 || p < 1 || capacity < 1) {
        throw DimensionError("IoHistory: channel counts and capacity must be positive");
    }
}

IoHistory IoHistory::from_signals(const Signal& u, const Signal& y, std::size_t capacity)
{
    if (u.cols() != y.cols()) {
        throw DimensionError("IoHistory: u and y must have the same length");
    }
    IoHistory h(u.rows(), y.rows(), capacity);
    const Index first = std::max<Index>(0, u.cols() - static_cast<Index>(capacity));
    for (Index t = first; t < u.cols(); ++t) {
        h.push(u.col(t), y.col(t));
    }
    return h;
}

void IoHistory::push(const Vector& u, const Vector& y)
{
    if (u.size() != m_ || y.size() != p_) {
        throw DimensionError("IoHistory: sample has the wrong size");
    }
    u_.push_back(u);
    y_.push_back(y);
    if (u_.size() > capacity_) {
        u_.pop_front();
        y_.pop_front();
    }
}

Vector IoHistory::w_ini(Index T_ini) const
{
    if (static_cast<Index>(size()) < T_ini) {
        throw InsufficientDataError("IoHistory: fewer than T_ini samples recorded");
    }
    Vector w(T_ini * (m_ + p_));
    const std::size_t first = size() - static_cast<std::size_t>(T_ini);
    for (Index k = 0; k < T_ini; ++k) {
        w.segment(k * m_, m_) = u_[first + k];
        w.segment(T_ini * m_ + k * p_, p_) = y_[first + k];
    }
    return w;
}

Vector IoHistory::window(Index T_ini, Index T_f) const
{
    const Index L = T_ini + T_f;
    if (static_cast<Index>(size()) < L) {
        throw InsufficientDataError("IoHistory: fewer than L samples recorded");
    }
    const std::size_t first = size() - static_cast<std::size_t>(L);
    Vector w(L * (m_ + p_));
    Index pos = 0;
    for (auto [start, count] : {std::pair<Index, Index>{0, T_ini}, std::pair<Index, Index>{T_ini, T_f}}) {
        for (Index k = 0; k < count; ++k) {
            w.segment(pos, m_) = u_[first + start + k];
            pos += m_;
        }
        for (Index k = 0; k < count; ++k) {
            w.segment(pos, p_) = y_[first + start + k];
            pos += p_;
        }
    }
    return w;
}

ControlSolution Controller::solve(const Vector& w_ini_hat) const
{
    const Vector ur = u_ref.size() ? u_ref : Vector(Vector::Zero(weights.sig.m));
    const ControlTarget target = make_target(weights, w_ini_hat, ur, y_ref);
    switch (config.method) {
    case Method::true_projection:
        if (!behavior) throw ParameterError("Controller: true_projection needs the behavior basis");
        return solve_true_projection(*behavior, weights, target, box, qp_settings);
    case Method::deepc_l2:
    case Method::deepc_projected:
        if (data) {
            return solve_deepc(*data, weights, target, config, box, qp_settings);
        }
        if (projector && config.method == Method::deepc_l2 && !(box && box->rows() > 0)) {
            // Explicit map w* = P W t with the projector's delta in place of lambda_g.
            if ((projector->W - weights.W).norm() > 1e-12 * weights.W.norm()) {
                throw ParameterError("Controller: explicit DeePC needs a projector weighted by the control W");
            }
            const Vector t = target.stacked();
            const Vector Wt = weights.W * t;
            ControlSolution sol;
            sol.w_star = projector->P * Wt;
            sol.objective = t.dot(Wt) - Wt.dot(sol.w_star);
            sol.u_apply = sol.w_star.segment(weights.future_offset(), weights.sig.m);
            sol.sigma_star = sol.w_star.head(weights.ini_size()) - target.w_ini_hat;
            return sol;
        }
        throw ParameterError("Controller: DeePC needs a data matrix (or a projector without box)");
    case Method::soft_squared:
        if (!projector) throw ParameterError("Controller: soft_squared needs a soft projector");
        return solve_soft_squared(*projector, weights, target, config.alpha, box, qp_settings);
    case Method::soft_quadratic:
        if (!projector) throw ParameterError("Controller: soft_quadratic needs a soft projector");
        return solve_soft_quadratic(*projector, weights, target, config.alpha_hat, box, qp_settings);
    }
    throw ParameterError("Controller: unknown method");
}

StepOutcome receding_horizon_step(const plant::PlantModel& model, Vector& x, const Controller& controller,
                                  IoHistory& history, const StepNoise& noise)
{
    StepOutcome out;
    out.solution = controller.solve(history.w_ini(controller.weights.T_ini));
    if (out.solution.used_qp && out.solution.status != qp::QpStatus::optimal) {
        throw StepError("receding_horizon_step: solver returned " + qp::to_string(out.solution.status),
                        out.solution.status);
    }
    out.u_applied = out.solution.u_apply;
    Vector d;
    Vector v;
    if (noise.source) {
        if (noise.dither_std > 0.0) {
            out.u_applied += noise.source->gaussian(model.m(), noise.dither_std);
        }
        if (noise.process_std.size()) d = noise.source->gaussian(noise.process_std);
        if (noise.measurement_std.size()) v = noise.source->gaussian(noise.measurement_std);
    }
    const plant::StepResult r = plant::step(model, x, out.u_applied, d, v);
    out.y_measured = r.y;
    out.y_true = model.C * x;
    history.push(out.u_applied, out.y_measured);
    x = r.x_next;
    return out;
}

csv::Table RunLog::table() const
{
    std::vector<std::string> header{"t"};
    for (Index i = 0; i < m; ++i) header.push_back("u" + std::to_string(i));
    for (Index i = 0; i < p; ++i) header.push_back("y" + std::to_string(i));
    for (const char* c : {"stage_cost", "cum_cost", "delta_t", "solver_iters", "drift_diag"}) header.emplace_back(c);
    csv::Table table(header);
    for (const RunRow& r : rows) {
        std::vector<double> v{static_cast<double>(r.t)};
        v.insert(v.end(), r.u.data(), r.u.data() + r.u.size());
        v.insert(v.end(), r.y.data(), r.y.data() + r.y.size());
        v.insert(v.end(), {r.stage_cost, r.cum_cost, r.delta_t, static_cast<double>(r.solver_iters), r.drift});
        table.row(v);
    }
    return table;
}

csv::Table RunLog::monitor_table() const
{
    csv::Table table({"t", "gram_sigma_min"});
    for (const RunRow& r : rows) {
        table.row(std::vector<double>{static_cast<double>(r.t), r.gram_sigma_min});
    }
    return table;
}

double RunLog::cost_from(long from) const
{
    double s = 0.0;
    for (const RunRow& r : rows) {
        if (r.t >= from) s += r.stage_cost;
    }
    return s;
}

RunLog online_control_loop(const plant::PlantModel& model, const plant::ExcitationData& initial,
                           const OnlineConfig& config)
{
    const ControlWeights& weights = config.controller.weights;
    const Index T_ini = weights.T_ini;
    const Index T_f = weights.T_f;
    if (config.T_sim < 1) {
        throw ParameterError("online_control_loop: T_sim must be positive");
    }
    if (initial.x_final.size() != model.n()) {
        throw DimensionError("online_control_loop: initial data carries no final state");
    }
    const DataMatrix data = build_data_matrix(initial.u, initial.y, T_ini, T_f);
    if (data.D() < weights.sig.m * weights.sig.L + model.n()) {
        throw InsufficientDataError("online_control_loop: initial data has fewer than d columns");
    }
    const Matrix Wp = config.projector_weight.size() ? config.projector_weight : weights.W;
    RecursiveProjector rec = RecursiveProjector::init(data, Wp, config.epsilon);

    Controller controller = config.controller;
    controller.data.reset();
    const Vector y_ref = controller.y_ref;
    const Index L = T_ini + T_f;
    IoHistory history = IoHistory::from_signals(initial.u, initial.y, static_cast<std::size_t>(L));
    Vector x = initial.x_final;
    plant::NoiseSource source(config.seed);
    StepNoise noise{&source, config.process_std, config.measurement_std, config.dither_std};

    RunLog log;
    log.m = model.m();
    log.p = model.p();
    double cum = 0.0;
    for (long t = 0; t < config.T_sim; ++t) {
        const bool switched = config.switch_step >= 0 && t >= config.switch_step && config.plant_after.A.size() > 0;
        const plant::PlantModel& current = switched ? config.plant_after : model;
        const bool flip = config.reference_period > 0 && (t / config.reference_period) % 2 == 1;
        controller.y_ref = flip ? Vector(-y_ref) : y_ref;
        controller.projector = rec.projector();

        const StepOutcome out = receding_horizon_step(current, x, controller, history, noise);

        RunRow row;
        row.t = t;
        row.u = out.u_applied;
        row.y = out.y_measured;
        const Vector ey = out.y_true - controller.y_ref;
        const Vector eu = out.u_applied - (controller.u_ref.size() ? controller.u_ref : Vector(Vector::Zero(log.m)));
        row.stage_cost = ey.dot(weights.Q * ey) + eu.dot(weights.R * eu);
        cum += row.stage_cost;
        row.cum_cost = cum;
        row.solver_iters = out.solution.solver_iterations;
        if (config.adapt) {
            rec.update(history.window(T_ini, T_f));
            row.drift = rec.drift();
            if (config.rebase_every > 0 && rec.step() % config.rebase_every == 0) {
                rec.rebase();
            }
        }
        row.delta_t = rec.delta();
        row.gram_sigma_min = rec.gram_sigma_min();
        log.rows.push_back(std::move(row));
    }
    if (config.adapt && !log.rows.empty()) log.final_drift = log.rows.back().drift;
    return log;
}

}  // namespace softproj::control
