#include "softproj/closed_loop.hpp"
#include "softproj/control.hpp"
#include "softproj/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <limits>

using namespace softproj;
using namespace softproj::control;
using testing::Rng;
using testing::rel_diff;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Instance {
    DataMatrix data;
    ControlWeights weights;
    ControlTarget target;
};

// Random data matrix in a small layout, random SPD weights and target.
Instance random_instance(Rng& rng, Index m, Index p, Index T_ini, Index T_f, Index T)
{
    const Signal u = rng.gaussian(m, T);
    const Signal y = rng.gaussian(p, T);
    Instance in{build_data_matrix(u, y, T_ini, T_f),
                make_weights(rng.spd(p), rng.spd(m), rng.uniform(1.0, 100.0), T_ini, T_f), ControlTarget{}};
    in.target = make_target(in.weights, rng.gaussian((m + p) * T_ini), rng.gaussian(m), rng.gaussian(p));
    return in;
}

Box open_box(Index n)
{
    // Selects every row but leaves all sides open: forces the QP path.
    return qp::TrajectoryConstraints{Matrix::Identity(n, n), Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

}  // namespace

TEST_CASE("weights layout")
{
    Matrix Q(2, 2), R(1, 1);
    Q << 2.0, 0.5, 0.5, 1.0;
    R << 0.01;
    const ControlWeights w = make_weights(Q, R, 1e6, 2, 3);
    CHECK(w.W.rows() == 15);
    CHECK(w.ini_size() == 6);
    CHECK(w.future_output_offset() == 9);
    CHECK(w.W.topLeftCorner(6, 6) == 1e6 * Matrix::Identity(6, 6));
    for (Index k = 0; k < 3; ++k) {
        CHECK(w.W(6 + k, 6 + k) == 0.01);
        CHECK(w.W.block(9 + 2 * k, 9 + 2 * k, 2, 2) == Q);
    }
    CHECK(linalg::is_spd(w.W));
    CHECK_THROWS_AS(make_weights(-Q, R, 1.0, 2, 3), DefinitenessError);
    CHECK_THROWS_AS(make_weights(Q, R, 0.0, 2, 3), DefinitenessError);

    const ControlTarget t = make_target(w, Vector::Zero(6), Vector::Constant(1, 0.3), Vector::Constant(2, 0.8));
    CHECK(t.w_ref.head(3) == Vector::Constant(3, 0.3));
    CHECK(t.w_ref.tail(6) == Vector::Constant(6, 0.8));
}

TEST_CASE("method names round trip")
{
    for (Method m : {Method::true_projection, Method::deepc_l2, Method::deepc_projected, Method::soft_squared,
                     Method::soft_quadratic}) {
        CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(method_from_string("ridge"), ParameterError);
    MethodConfig c;
    c.method = Method::deepc_l2;
    c.lambda_g = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("DeePC on identity data halves the target")
{
    // m = p = 1, T_ini = T_f = 1: qL = 4, H = I, W = I, lambda_g = 1.
    DataMatrix d;
    d.sig = Signature{1, 1, 2};
    d.T_ini = 1;
    d.T_f = 1;
    d.H = Matrix::Identity(4, 4);
    d.perm = control_permutation(d.sig, 1);
    const ControlWeights w = make_weights(Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1.0, 1, 1);
    REQUIRE(w.W == Matrix::Identity(4, 4));
    const ControlTarget t = make_target(w, (Vector(2) << 0.4, -1.0).finished(), Vector::Constant(1, 2.0),
                                        Vector::Constant(1, 3.0));
    MethodConfig cfg;
    cfg.method = Method::deepc_l2;
    cfg.lambda_g = 1.0;
    const ControlSolution s = solve_deepc(d, w, t, cfg);
    CHECK((s.w_star - t.stacked() / 2.0).norm() <= 1e-14);
    CHECK((s.g_star - d.permuted().transpose() * t.stacked() / 2.0).norm() <= 1e-14);
    CHECK(s.u_apply(0) == doctest::Approx(1.0));
}

TEST_CASE("unconstrained DeePC equals the weighted soft projector map")
{
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        // Both the D-space and the qL-space branches are exercised.
        const Index T = trial % 2 == 0 ? 20 : 200;
        const Instance in = random_instance(rng, 1, 2, 2, 3, T);
        MethodConfig cfg;
        cfg.method = Method::deepc_l2;
        cfg.lambda_g = std::pow(10.0, rng.uniform(-2.0, 3.0));
        const ControlSolution s = solve_deepc(in.data, in.weights, in.target, cfg);
        const SoftProjector sp = soft_projector(in.data.permuted(), in.weights.W, cfg.lambda_g);
        const Vector explicit_w = sp.P * in.weights.W * in.target.stacked();
        CHECK((s.w_star - explicit_w).norm() <= 1e-10 * std::max(1.0, explicit_w.norm()));
    }
}

TEST_CASE("DeePC closed form and QP path agree")
{
    Rng rng(62);
    for (Method method : {Method::deepc_l2, Method::deepc_projected}) {
        for (int trial = 0; trial < 5; ++trial) {
            const Instance in = random_instance(rng, 1, 1, 2, 3, 60);
            MethodConfig cfg;
            cfg.method = method;
            cfg.lambda_g = 5.0;
            const ControlSolution a = solve_deepc(in.data, in.weights, in.target, cfg);
            const ControlSolution b = solve_deepc(in.data, in.weights, in.target, cfg, open_box(10));
            REQUIRE(b.status == qp::QpStatus::optimal);
            CHECK(b.used_qp);
            CHECK(rel_diff(a.w_star, b.w_star) <= 1e-6);
            CHECK(std::abs(a.objective - b.objective) <= 1e-6 * std::abs(a.objective));
        }
    }
}

TEST_CASE("projected regularizer leaves row(Z_p; U_f) unpenalized")
{
    Rng rng(63);
    const Instance in = random_instance(rng, 1, 1, 2, 3, 30);
    MethodConfig cfg;
    cfg.method = Method::deepc_projected;
    cfg.lambda_g = 10.0;
    const ControlSolution s = solve_deepc(in.data, in.weights, in.target, cfg);
    const Matrix Pi = regularizer_pi(in.data);
    const Vector rest = s.g_star - Pi * s.g_star;
    const double reg = cfg.lambda_g * rest.squaredNorm();
    CHECK(s.objective == doctest::Approx(tracking_cost(in.weights.W, s.w_star, in.target.stacked()) + reg));

    // The projected regularizer shrinks less than the plain one.
    cfg.method = Method::deepc_l2;
    const ControlSolution plain = solve_deepc(in.data, in.weights, in.target, cfg);
    CHECK(tracking_cost(in.weights.W, s.w_star, in.target.stacked()) <=
          tracking_cost(in.weights.W, plain.w_star, in.target.stacked()) + 1e-9);
}

TEST_CASE("boxed DeePC matches a full-g QP")
{
    Rng rng(64);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance in = random_instance(rng, 1, 1, 1, 3, 40);
        const qp::ChannelBox ub{Vector::Constant(1, -0.3), Vector::Constant(1, 0.3)};
        const qp::ChannelBox yb{Vector::Constant(1, -0.5), Vector::Constant(1, 0.5)};
        const Box box = qp::assemble_box_on_trajectory(in.data.sig, 1, 3, ub, yb);
        MethodConfig cfg;
        cfg.method = Method::deepc_l2;
        cfg.lambda_g = 2.0;
        const ControlSolution s = solve_deepc(in.data, in.weights, in.target, cfg, box);
        REQUIRE(s.status == qp::QpStatus::optimal);

        // Independent formulation: every column of H is a decision variable.
        const Matrix H = in.data.permuted();
        const Vector Wt = in.weights.W * in.target.stacked();
        Matrix P = 2.0 * (H.transpose() * in.weights.W * H);
        P.diagonal().array() += 2.0 * cfg.lambda_g;
        const qp::QpProblem full{P, -2.0 * H.transpose() * Wt, box->A * H, box->l, box->u};
        const auto ref = qp::solve(full);
        REQUIRE(ref.status == qp::QpStatus::optimal);
        const double f_ref = ref.objective + in.target.stacked().dot(Wt);
        CHECK(std::abs(s.objective - f_ref) <= 1e-5 * std::abs(f_ref));
        CHECK((box->A * s.w_star - box->u).maxCoeff() <= 1e-6);
        CHECK((box->l - box->A * s.w_star).maxCoeff() <= 1e-6);
    }
}

TEST_CASE("true projection")
{
    Rng rng(65);
    const auto sys = testing::random_system(rng, 2, 1, 1);
    const ControlWeights w = make_weights(rng.spd(1), rng.spd(1), 10.0, 2, 3);
    const Subspace beh = behavior_basis(sys.A, sys.B, sys.C, 5).permuted(control_permutation(w.sig, 2));

    // A target inside the behavior is a fixed point.
    const Vector inside = beh.basis() * rng.gaussian(beh.dim());
    const ControlTarget t_in{inside.head(4), inside.tail(6)};
    CHECK((solve_true_projection(beh, w, t_in).w_star - inside).norm() <= 1e-10 * inside.norm());

    // The full space returns the target.
    const Subspace full(rng.gaussian(10, 10));
    const ControlTarget t{rng.gaussian(4), rng.gaussian(6)};
    CHECK((solve_true_projection(full, w, t).w_star - t.stacked()).norm() <= 1e-9 * t.stacked().norm());

    // Closed form and QP path agree.
    const ControlSolution a = solve_true_projection(beh, w, t);
    const ControlSolution b = solve_true_projection(beh, w, t, open_box(10));
    REQUIRE(b.status == qp::QpStatus::optimal);
    CHECK(rel_diff(a.w_star, b.w_star) <= 1e-7);
    CHECK((a.w_star - weighted_projector(beh, w.W) * w.W * t.stacked()).norm() <= 1e-9 * a.w_star.norm());
}

TEST_CASE("soft formulations: closed forms, QP paths and objectives")
{
    Rng rng(66);
    const Instance in = random_instance(rng, 1, 2, 2, 3, 80);
    const Index n = in.weights.W.rows();
    const SoftProjector sp = soft_projector(in.data.permuted(), Matrix::Identity(n, n), 0.5);
    const Vector t = in.target.stacked();

    const ControlSolution s_sq = solve_soft_squared(sp, in.weights, in.target, 1e3);
    CHECK(rel_diff(s_sq.w_star, soft_squared_map(sp, in.weights.W, 1e3) * t) <= 1e-10);
    const Matrix C = Matrix::Identity(n, n) - sp.P;
    CHECK(s_sq.objective == doctest::Approx(tracking_cost(in.weights.W, s_sq.w_star, t) +
                                          1e3 * (C * s_sq.w_star).squaredNorm())
                              .epsilon(1e-8));
    const ControlSolution s_sq_qp = solve_soft_squared(sp, in.weights, in.target, 1e3, open_box(n));
    REQUIRE(s_sq_qp.status == qp::QpStatus::optimal);
    CHECK(rel_diff(s_sq.w_star, s_sq_qp.w_star) <= 1e-6);

    const ControlSolution s_quad = solve_soft_quadratic(sp, in.weights, in.target, 40.0);
    CHECK(rel_diff(s_quad.w_star, soft_quadratic_map(sp, in.weights.W, 40.0) * t) <= 1e-10);
    CHECK(s_quad.objective == doctest::Approx(tracking_cost(in.weights.W, s_quad.w_star, t) +
                                          40.0 / 0.5 * s_quad.w_star.dot(C * s_quad.w_star))
                              .epsilon(1e-8));
    const ControlSolution s_quad_qp = solve_soft_quadratic(sp, in.weights, in.target, 40.0, open_box(n));
    REQUIRE(s_quad_qp.status == qp::QpStatus::optimal);
    CHECK(rel_diff(s_quad.w_star, s_quad_qp.w_star) <= 1e-6);

    // Vanishing penalty returns the target.
    CHECK(rel_diff(solve_soft_squared(sp, in.weights, in.target, 1e-14).w_star, t) <= 1e-9);
    CHECK(rel_diff(solve_soft_quadratic(sp, in.weights, in.target, 1e-14).w_star, t) <= 1e-9);

    CHECK_THROWS_AS(solve_soft_squared(sp, in.weights, in.target, 0.0), ParameterError);
    CHECK_THROWS_AS(solve_soft_quadratic(sp, in.weights, in.target, -1.0), ParameterError);

    // (I - P) is PSD with eigenvalues delta / (sigma^2 + delta).
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(C)).eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
}

TEST_CASE("eigenvalue formulas")
{
    CHECK(soft_squared_eigenvalue(1000.0, 1.0, 1e6) ==
          doctest::Approx(std::pow(1e6 + 1.0, 2) / (std::pow(1e6 + 1.0, 2) + 1e6)).epsilon(1e-15));
    CHECK(1.0 - soft_squared_eigenvalue(1000.0, 1.0, 1e6) == doctest::Approx(1e-6).epsilon(1e-5));
    CHECK(soft_quadratic_eigenvalue(20.0, 1.0, 1e6) == doctest::Approx(401.0 / (401.0 + 1e6)).epsilon(1e-15));
    CHECK(soft_quadratic_eigenvalue(20.0, 1.0, 1e6) == doctest::Approx(4.01e-4).epsilon(1e-3));

    // Small delta: squared form passes everything, quadratic form keeps sigma^2 / (sigma^2 + alpha_hat).
    CHECK(soft_squared_eigenvalue(30.0, 1e-9, 1e6) == doctest::Approx(1.0));
    CHECK(soft_quadratic_eigenvalue(30.0, 1e-12, 50.0) == doctest::Approx(900.0 / 950.0));

    // Against eigendecompositions of the assembled maps (W = I).
    Rng rng(67);
    const Index qL = 5;
    const Matrix U = Eigen::HouseholderQR<Matrix>(rng.gaussian(qL, qL)).householderQ();
    const Matrix V = Eigen::HouseholderQR<Matrix>(rng.gaussian(12, 12)).householderQ();
    const Vector sig = (Vector(5) << 1000.0, 100.0, 50.0, 30.0, 20.0).finished();
    const Matrix H = U * sig.asDiagonal() * V.leftCols(qL).transpose();
    const Matrix I = Matrix::Identity(qL, qL);
    for (double delta : {1e-3, 0.3, 10.0, 1e3}) {
        const SoftProjector sp = soft_projector(H, I, delta);
        const Vector e_sq = Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(soft_squared_map(sp, I, 1e6)))
                              .eigenvalues();
        const Vector e_quad =
            Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(soft_quadratic_map(sp, I, 1e6 * delta)))
                .eigenvalues();
        std::vector<double> f_sq, f_quad;
        for (Index i = 0; i < qL; ++i) {
            f_sq.push_back(soft_squared_eigenvalue(sig(i), delta, 1e6));
            f_quad.push_back(soft_quadratic_eigenvalue(sig(i), delta, 1e6 * delta));
        }
        std::sort(f_sq.begin(), f_sq.end());
        std::sort(f_quad.begin(), f_quad.end());
        for (Index i = 0; i < qL; ++i) {
            CHECK(std::abs(e_sq(i) - f_sq[static_cast<std::size_t>(i)]) <= 1e-9);
            CHECK(std::abs(e_quad(i) - f_quad[static_cast<std::size_t>(i)]) <= 1e-9);
        }
    }
}

TEST_CASE("quadratic form converges to DeePC as delta shrinks")
{
    Rng rng(68);
    const Instance in = random_instance(rng, 1, 1, 1, 2, 40);
    const Index n = in.weights.W.rows();
    const Matrix H = in.data.permuted();
    MethodConfig cfg;
    cfg.method = Method::deepc_l2;
    cfg.lambda_g = 3.0;
    const Vector w_deepc = solve_deepc(in.data, in.weights, in.target, cfg).w_star;
    double last = std::numeric_limits<double>::infinity();
    for (int e = 1; e <= 9; ++e) {
        const double delta = std::pow(10.0, -e);
        const SoftProjector sp = soft_projector(H, Matrix::Identity(n, n), delta);
        const Vector w_quad = solve_soft_quadratic(sp, in.weights, in.target, cfg.lambda_g).w_star;
        const double gap = (w_quad - w_deepc).norm() / w_deepc.norm();
        CHECK(gap < last);
        last = gap;
    }
    CHECK(last <= 1e-6);
}

TEST_CASE("squared form approaches the exact behavior on clean data")
{
    Rng rng(69);
    const auto sys = testing::random_system(rng, 2, 1, 1);
    const Signal u = rng.gaussian(1, 120);
    const Signal y = plant::simulate(sys, Vector::Zero(2), u);
    const DataMatrix d = build_data_matrix(u, y, 2, 3);
    const ControlWeights w = make_weights(Matrix::Identity(1, 1), Matrix::Identity(1, 1), 10.0, 2, 3);
    const ControlTarget t{rng.gaussian(4), rng.gaussian(6)};
    const Subspace beh = behavior_basis(sys.A, sys.B, sys.C, 5).permuted(d.perm);
    const Vector exact = solve_true_projection(beh, w, t).w_star;
    // delta relative to the weakest excited direction of the data
    const double s2 = std::pow(linalg::singular_values(d.H)(beh.dim() - 1), 2);
    double last = std::numeric_limits<double>::infinity();
    for (auto [delta, alpha] : {std::pair{1e-2, 1e4}, std::pair{1e-4, 1e6}, std::pair{1e-6, 1e8}}) {
        const SoftProjector sp = soft_projector(d.permuted(), Matrix::Identity(10, 10), delta * s2);
        const double gap = (solve_soft_squared(sp, w, t, alpha).w_star - exact).norm() / exact.norm();
        CHECK(gap < last);
        last = gap;
    }
    CHECK(last <= 1e-4);
}

TEST_CASE("DeePC stays within the solution bound of the exact projection")
{
    Rng rng(70);
    for (int trial = 0; trial < 10; ++trial) {
        const Index qL = 10, dim = 5, D = 80;
        const Matrix B = linalg::orthonormal_basis(rng.gaussian(qL, dim));
        const NoiseDecomposition dec(B, rng.gaussian(dim, D), 0.05 * rng.gaussian(qL, D));
        const Matrix W = rng.spd(qL);
        const Vector target = rng.gaussian(qL);
        const double delta = 0.5;
        const Vector w_data = soft_projector(dec.data(), W, delta).P * W * target;
        const Vector w_exact = weighted_projector(Subspace(B, true), W) * W * target;
        CHECK((w_data - w_exact).norm() <= solution_error_bound(error_bound(dec, W, delta), W, target));
    }
}

TEST_CASE("receding-horizon step")
{
    const plant::PlantModel model = plant::case_study_plant();
    const Index T_ini = 2, T_f = 6;
    const ControlWeights w = make_weights(Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1), 1e6, T_ini, T_f);
    Controller c;
    c.weights = w;
    c.config.method = Method::true_projection;
    c.y_ref = Vector::Zero(2);
    c.behavior = behavior_basis(model.A, model.B, model.C, T_ini + T_f).permuted(control_permutation(w.sig, T_ini));

    SUBCASE("equilibrium")
    {
        IoHistory h(1, 2, 16);
        for (int k = 0; k < T_ini; ++k) h.push(Vector::Zero(1), Vector::Zero(2));
        Vector x = Vector::Zero(4);
        const StepOutcome out = receding_horizon_step(model, x, c, h);
        CHECK(out.u_applied.norm() <= 1e-6);
        CHECK(h.size() == 3);
    }
    SUBCASE("applied input respects the box")
    {
        c.y_ref = Vector::Constant(2, 5.0);
        c.box = qp::assemble_box_on_trajectory(w.sig, T_ini, T_f,
                                               qp::ChannelBox{Vector::Constant(1, -0.5), Vector::Constant(1, 0.5)},
                                               std::nullopt);
        IoHistory h(1, 2, 16);
        for (int k = 0; k < T_ini; ++k) h.push(Vector::Zero(1), Vector::Zero(2));
        Vector x = Vector::Zero(4);
        const StepOutcome out = receding_horizon_step(model, x, c, h);
        CHECK(std::abs(out.u_applied(0)) <= 0.5 + 1e-6);
        CHECK(out.u_applied(0) > 0.4);
    }
    SUBCASE("too little history")
    {
        IoHistory h(1, 2, 16);
        Vector x = Vector::Zero(4);
        CHECK_THROWS_AS(receding_horizon_step(model, x, c, h), InsufficientDataError);
    }
}

TEST_CASE("closed loop with the exact behavior reaches a reachable set point")
{
    plant::TwoDiscParams prm;
    prm.k_ground = 1.0;
    prm.dt = 0.5;
    const plant::PlantModel model = plant::case_study_plant(prm);
    const Index T_ini = 2, T_f = 12;
    const Vector y_ref = Vector::Constant(2, 0.8);
    // Steady state: (I - A) x = B u, C x = y_ref.
    Matrix ss = Matrix::Zero(6, 5);
    ss.topLeftCorner(4, 4) = Matrix::Identity(4, 4) - model.A;
    ss.topRightCorner(4, 1) = -model.B;
    ss.bottomLeftCorner(2, 4) = model.C;
    Vector rhs = Vector::Zero(6);
    rhs.tail(2) = y_ref;
    const Vector xu = ss.colPivHouseholderQr().solve(rhs);
    REQUIRE((ss * xu - rhs).norm() <= 1e-10);

    const ControlWeights w = make_weights(Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1), 1e6, T_ini, T_f);
    Controller c;
    c.weights = w;
    c.config.method = Method::true_projection;
    c.u_ref = xu.tail(1);
    c.y_ref = y_ref;
    c.behavior = behavior_basis(model.A, model.B, model.C, T_ini + T_f).permuted(control_permutation(w.sig, T_ini));
    IoHistory h(1, 2, 16);
    for (int k = 0; k < T_ini; ++k) h.push(Vector::Zero(1), Vector::Zero(2));
    Vector x = Vector::Zero(4);
    StepOutcome out;
    for (int k = 0; k < 50; ++k) out = receding_horizon_step(model, x, c, h);
    CHECK((out.y_true - y_ref).norm() <= 1e-3);
}

TEST_CASE("io history windows")
{
    IoHistory h(1, 1, 3);
    for (int k = 1; k <= 5; ++k) h.push(Vector::Constant(1, k), Vector::Constant(1, 10 * k));
    CHECK(h.size() == 3);
    CHECK(h.w_ini(2) == (Vector(4) << 4, 5, 40, 50).finished());
    CHECK(h.window(1, 2) == (Vector(6) << 3, 30, 4, 5, 40, 50).finished());
    CHECK_THROWS_AS(h.window(2, 2), InsufficientDataError);
    CHECK_THROWS_AS(h.push(Vector::Zero(2), Vector::Zero(1)), DimensionError);
}

TEST_CASE("online loop")
{
    plant::TwoDiscParams prm;
    prm.k_ground = 1.0;
    prm.dt = 0.5;
    const plant::PlantModel model = plant::case_study_plant(prm);
    plant::NoiseConfig nc;
    nc.seed = 5;
    nc.snr_target = 10.0;
    const plant::ExcitationData init = plant::collect_excitation_data(model, 150, 1.0, nc);

    OnlineConfig oc;
    oc.controller.weights = make_weights(Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1), 1e4, 2, 8);
    oc.controller.config.method = Method::soft_squared;
    oc.controller.config.alpha = 1e3;
    oc.controller.y_ref = Vector::Constant(2, 0.5);
    oc.T_sim = 200;
    oc.reference_period = 40;
    oc.measurement_std = init.measurement_std;
    oc.dither_std = 0.2;
    oc.seed = 9;

    SUBCASE("frozen projector equals an offline receding loop")
    {
        oc.adapt = false;
        oc.T_sim = 60;
        const RunLog log = online_control_loop(model, init, oc);

        const Index L = 10;
        const DataMatrix data = build_data_matrix(init.u, init.y, 2, 8);
        const RecursiveProjector rec = RecursiveProjector::init(data, oc.controller.weights.W, oc.epsilon);
        Controller c = oc.controller;
        c.projector = rec.projector();
        IoHistory h = IoHistory::from_signals(init.u, init.y, static_cast<std::size_t>(L));
        Vector x = init.x_final;
        plant::NoiseSource src(oc.seed);
        const StepNoise noise{&src, Vector(), oc.measurement_std, oc.dither_std};
        for (long t = 0; t < oc.T_sim; ++t) {
            c.y_ref = (t / 40) % 2 == 1 ? Vector(-oc.controller.y_ref) : oc.controller.y_ref;
            const StepOutcome out = receding_horizon_step(model, x, c, h, noise);
            CHECK((out.u_applied - log.rows[static_cast<std::size_t>(t)].u).norm() <= 1e-12);
        }
        for (const RunRow& r : log.rows) CHECK(r.delta_t == log.rows.front().delta_t);
        CHECK(log.final_drift == 0.0);
    }
    SUBCASE("adaptive projector")
    {
        const RunLog log = online_control_loop(model, init, oc);
        REQUIRE(log.rows.size() == 200);
        for (std::size_t k = 1; k < log.rows.size(); ++k) CHECK(log.rows[k].delta_t >= log.rows[k - 1].delta_t);
        CHECK(log.final_drift <= 0.05);
        CHECK(log.final_drift > 0.0);
        CHECK(log.table().header().size() == 1 + 1 + 2 + 5);
        CHECK(log.cost_from(0) == doctest::Approx(log.rows.back().cum_cost));
    }
}
