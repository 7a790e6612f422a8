#include "softproj/experiment.hpp"

#include "softproj/errors.hpp"
#include "softproj/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace softproj::plant {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TwoDiscParams, J1, J2, k, k_ground, c, c_ground, dt)
}

namespace softproj::experiment {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EigencurveConfig, sigmas, alpha, delta_min, delta_max, points)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BoundConfig, L, columns, snr, delta_min, delta_max, points, weighted)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OnlineSettings, T_sim, initial_length, stiffness_scale, switch_step,
                                                dither_std, reference_period, rebase_every, method, runs)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, plant, T_ini, T_f, Q, R, lambda_sigma, y_ref, u_ref,
                                                constraints, u_min, u_max, y_min, y_max, data_length, input_std,
                                                process_std, noisy_initial, methods, lambda_g_grid, delta_grid, alpha, alpha_hat,
                                                epsilon, snr_list, validation_realizations, test_realizations, seed,
                                                jobs, max_failure_fraction, output_dir, eigencurves, bound, online)

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows)
{
    const Index r = static_cast<Index>(rows.size());
    const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        if (static_cast<Index>(rows[i].size()) != c) {
            throw ParameterError("config: ragged matrix");
        }
        for (Index j = 0; j < c; ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return m;
}

Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double mean_of(const std::vector<double>& v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v)
{
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

void check_failures(int failures, int total, double limit, const std::string& what)
{
    if (total > 0 && static_cast<double>(failures) > limit * static_cast<double>(total)) {
        throw CampaignError(what + ": " + std::to_string(failures) + " of " + std::to_string(total) +
                            " solves failed");
    }
}

}  // namespace

ExperimentConfig::ExperimentConfig()
    : lambda_g_grid(logspace(10.0, 1e7, 25)), delta_grid(logspace(1e-3, 1e3, 25))
{
    // Case-study plant: grounded first disc and a sample time at which the
    // 12-step horizon spans the transient.
    plant.k_ground = 1.0;
    plant.dt = 0.5;
}

void ExperimentConfig::validate() const
{
    if (T_ini < 1 || T_f < 1) throw ParameterError("config: T_ini and T_f must be positive");
    if (data_length < T_ini + T_f) throw ParameterError("config: data_length shorter than the window");
    if (lambda_g_grid.empty() || delta_grid.empty()) throw ParameterError("config: empty parameter grid");
    for (double v : lambda_g_grid) {
        if (!(v > 0.0)) throw ParameterError("config: lambda_g grid entries must be positive");
    }
    for (double v : delta_grid) {
        if (!(v > 0.0)) throw ParameterError("config: delta grid entries must be positive");
    }
    if (snr_list.empty()) throw ParameterError("config: empty SNR list");
    for (double s : snr_list) {
        if (!(s > 0.0)) throw ParameterError("config: SNR values must be positive");
    }
    if (validation_realizations < 1 || test_realizations < 1) {
        throw ParameterError("config: realization counts must be positive");
    }
    if (methods.empty()) throw ParameterError("config: no methods selected");
    for (const auto& m : methods) {
        const control::Method method = control::method_from_string(m);
        if (method == control::Method::true_projection) {
            throw ParameterError("config: true_projection needs the exact model and is not a campaign method");
        }
    }
    if (!(alpha > 0.0) || !(alpha_hat > 0.0) || !(epsilon > 0.0)) {
        throw ParameterError("config: alpha, alpha_hat and epsilon must be positive");
    }
    if (jobs < 1) throw ParameterError("config: jobs must be at least 1");
    if (static_cast<Index>(y_ref.size()) != static_cast<Index>(Q.size()) ||
        static_cast<Index>(u_ref.size()) != static_cast<Index>(R.size())) {
        throw ParameterError("config: y_ref/u_ref sizes must match Q/R");
    }
}

std::vector<double> logspace(double lo, double hi, int n)
{
    if (!(lo > 0.0) || !(hi > 0.0) || n < 1) {
        throw ParameterError("logspace: bounds must be positive and n >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = n == 1 ? lo : std::pow(10.0, a + (b - a) * i / (n - 1));
    }
    out.front() = lo;
    if (n > 1) out.back() = hi;
    return out;
}

std::string config_to_json(const ExperimentConfig& config)
{
    return nlohmann::json(config).dump(2);
}

ExperimentConfig config_from_json(const std::string& text)
{
    try {
        // Nested objects are merged key by key over the defaults.
        nlohmann::json merged = ExperimentConfig();
        merged.merge_patch(nlohmann::json::parse(text));
        return merged.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write config " + path.string());
    }
    out << config_to_json(config) << '\n';
}

std::uint64_t realization_seed(std::uint64_t master, Stage stage, std::size_t snr_index, std::size_t index)
{
    const std::uint64_t global = (static_cast<std::uint64_t>(stage) << 40) | static_cast<std::uint64_t>(index);
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(snr_index));
    return splitmix64(h ^ global);
}

CaseStudy make_case_study(const ExperimentConfig& config)
{
    config.validate();
    CaseStudy cs;
    cs.plant = plant::case_study_plant(config.plant);
    cs.weights = control::make_weights(to_matrix(config.Q), to_matrix(config.R), config.lambda_sigma, config.T_ini,
                                       config.T_f);
    if (cs.weights.sig.m != cs.plant.m() || cs.weights.sig.p != cs.plant.p()) {
        throw DimensionError("config: Q/R sizes do not match the plant");
    }
    cs.u_ref = to_vector(config.u_ref);
    cs.y_ref = to_vector(config.y_ref);
    if (config.constraints) {
        const Index m = cs.plant.m();
        const Index p = cs.plant.p();
        cs.box = qp::assemble_box_on_trajectory(
            cs.weights.sig, config.T_ini, config.T_f,
            qp::ChannelBox{Vector::Constant(m, config.u_min), Vector::Constant(m, config.u_max)},
            qp::ChannelBox{Vector::Constant(p, config.y_min), Vector::Constant(p, config.y_max)});
    }
    return cs;
}

Realization make_realization(const CaseStudy& cs, const ExperimentConfig& config, double snr, std::uint64_t seed)
{
    plant::NoiseConfig noise;
    noise.process_std = Vector::Constant(cs.plant.disturbances(), config.process_std);
    noise.snr_target = snr;
    noise.seed = seed;
    const plant::ExcitationData d = plant::collect_excitation_data(cs.plant, config.data_length, config.input_std, noise);

    Realization r{build_data_matrix(d.u, d.y, config.T_ini, config.T_f), Matrix(), control::ControlTarget(),
                  d.measurement_std};
    r.gram = kernels::gram(r.data.permuted());

    // The plant rests at zero before the plan. Outputs of the initial window
    // are optionally measured with noise.
    plant::NoiseSource src(splitmix64(seed ^ 0x5eedULL));
    const Index m = cs.plant.m();
    const Index p = cs.plant.p();
    Vector w_ini = Vector::Zero(cs.weights.ini_size());
    for (Index k = 0; config.noisy_initial && k < config.T_ini; ++k) {
        w_ini.segment(config.T_ini * m + k * p, p) = src.gaussian(d.measurement_std);
    }
    r.target = control::make_target(cs.weights, w_ini, cs.u_ref, cs.y_ref);
    return r;
}

PlanScore score_plan(const CaseStudy& cs, const Vector& w_star)
{
    const Index m = cs.plant.m();
    const Index p = cs.plant.p();
    const Index T_f = cs.weights.T_f;
    Signal u(m, T_f);
    Signal y_plan(p, T_f);
    for (Index k = 0; k < T_f; ++k) {
        u.col(k) = w_star.segment(cs.weights.future_offset() + k * m, m);
        y_plan.col(k) = w_star.segment(cs.weights.future_output_offset() + k * p, p);
    }
    const Signal y = plant::simulate(cs.plant, Vector::Zero(cs.plant.n()), u);
    PlanScore s;
    for (Index k = 0; k < T_f; ++k) {
        const Vector ey = y.col(k) - cs.y_ref;
        const Vector eu = u.col(k) - cs.u_ref;
        s.realized_cost += ey.dot(cs.weights.Q * ey) + eu.dot(cs.weights.R * eu);
    }
    s.prediction_error = (y_plan - y).norm();
    s.ok = std::isfinite(s.realized_cost) && std::isfinite(s.prediction_error);
    return s;
}

std::string parameter_name(control::Method method)
{
    switch (method) {
    case control::Method::deepc_l2:
    case control::Method::deepc_projected: return "lambda_g";
    case control::Method::soft_squared:
    case control::Method::soft_quadratic: return "delta";
    case control::Method::true_projection: break;
    }
    throw ParameterError("parameter_name: method has no tuned parameter");
}

const std::vector<double>& parameter_grid(const ExperimentConfig& config, control::Method method)
{
    return parameter_name(method) == "lambda_g" ? config.lambda_g_grid : config.delta_grid;
}

PlanScore evaluate(const CaseStudy& cs, const ExperimentConfig& config, const Realization& r, control::Method method,
                   double parameter)
{
    try {
        control::ControlSolution sol;
        switch (method) {
        case control::Method::deepc_l2:
        case control::Method::deepc_projected: {
            control::MethodConfig mc;
            mc.method = method;
            mc.lambda_g = parameter;
            sol = control::solve_deepc(r.data, cs.weights, r.target, mc, cs.box);
            break;
        }
        case control::Method::soft_squared: {
            const Matrix I = Matrix::Identity(r.gram.rows(), r.gram.cols());
            sol = control::solve_soft_squared(soft_projector_from_gram(r.gram, I, parameter), cs.weights, r.target,
                                              config.alpha, cs.box);
            break;
        }
        case control::Method::soft_quadratic: {
            const Matrix I = Matrix::Identity(r.gram.rows(), r.gram.cols());
            sol = control::solve_soft_quadratic(soft_projector_from_gram(r.gram, I, parameter), cs.weights,
                                                r.target, config.alpha_hat, cs.box);
            break;
        }
        case control::Method::true_projection:
            throw ParameterError("evaluate: true_projection is not a data-driven method");
        }
        if (sol.used_qp && sol.status != qp::QpStatus::optimal) {
            return PlanScore{};
        }
        return score_plan(cs, sol.w_star);
    } catch (const ConditioningError&) {
        return PlanScore{};
    } catch (const DefinitenessError&) {
        return PlanScore{};
    }
}

std::size_t select_parameter(const std::vector<double>& grid, const std::vector<double>& costs, double rel_tol)
{
    if (grid.size() != costs.size() || grid.empty()) {
        throw DimensionError("select_parameter: grid and costs differ in length");
    }
    double best = std::numeric_limits<double>::infinity();
    for (double c : costs) {
        if (std::isfinite(c)) best = std::min(best, c);
    }
    if (!std::isfinite(best)) {
        throw CampaignError("select_parameter: no grid point produced a finite cost");
    }
    std::size_t pick = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::isfinite(costs[i]) && costs[i] <= best + rel_tol * std::abs(best) &&
            (pick == grid.size() || grid[i] < grid[pick])) {
            pick = i;
        }
    }
    return pick;
}

csv::Table ValidationResult::curve_table() const
{
    csv::Table t({"snr", "method", "parameter", "mean_realized_cost", "mean_pred_error", "failures"});
    for (const auto& p : curve) {
        t.row({csv::format_double(p.snr), p.method, csv::format_double(p.parameter),
               csv::format_double(p.mean_realized_cost), csv::format_double(p.mean_prediction_error),
               std::to_string(p.failures)});
    }
    return t;
}

csv::Table ValidationResult::chosen_table() const
{
    csv::Table t({"snr", "method", "parameter", "validation_cost"});
    for (const auto& c : chosen) {
        t.row({csv::format_double(c.snr), c.method, csv::format_double(c.parameter),
               csv::format_double(c.validation_cost)});
    }
    return t;
}

ValidationResult run_validation(const ExperimentConfig& config)
{
    const CaseStudy cs = make_case_study(config);
    std::vector<control::Method> methods;
    for (const auto& m : config.methods) methods.push_back(control::method_from_string(m));
    const auto N = static_cast<std::size_t>(config.validation_realizations);

    ValidationResult out;
    for (std::size_t s = 0; s < config.snr_list.size(); ++s) {
        const double snr = config.snr_list[s];
        // scores[i][method][grid]
        std::vector<std::vector<std::vector<PlanScore>>> scores(N);
        kernels::parallel_for(N, config.jobs, [&](std::size_t i) {
            const Realization r = make_realization(cs, config, snr, realization_seed(config.seed, Stage::validation, s, i));
            scores[i].resize(methods.size());
            for (std::size_t k = 0; k < methods.size(); ++k) {
                for (double v : parameter_grid(config, methods[k])) {
                    scores[i][k].push_back(evaluate(cs, config, r, methods[k], v));
                }
            }
        });
        for (std::size_t k = 0; k < methods.size(); ++k) {
            const auto& grid = parameter_grid(config, methods[k]);
            std::vector<double> costs;
            int failures_total = 0;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                std::vector<double> cost;
                std::vector<double> pred;
                int failures = 0;
                for (std::size_t i = 0; i < N; ++i) {
                    const PlanScore& sc = scores[i][k][g];
                    if (sc.ok) {
                        cost.push_back(sc.realized_cost);
                        pred.push_back(sc.prediction_error);
                    } else {
                        ++failures;
                    }
                }
                failures_total += failures;
                out.curve.push_back(ValidationPoint{snr, config.methods[k], grid[g], mean_of(cost), mean_of(pred),
                                                    failures});
                costs.push_back(mean_of(cost));
            }
            check_failures(failures_total, static_cast<int>(N * grid.size()), config.max_failure_fraction,
                           "validation " + config.methods[k]);
            const std::size_t pick = select_parameter(grid, costs);
            out.chosen.push_back(ChosenParameter{snr, config.methods[k], grid[pick], costs[pick]});
        }
    }
    return out;
}

std::vector<ChosenParameter> read_chosen(const std::filesystem::path& path)
{
    const auto [header, rows] = csv::read_table(path);
    const std::vector<std::string> expected{"snr", "method", "parameter", "validation_cost"};
    if (header != expected) {
        throw IoError("read_chosen: unexpected header in " + path.string());
    }
    std::vector<ChosenParameter> out;
    for (const auto& r : rows) {
        out.push_back(ChosenParameter{csv::parse_double(r[0]), r[1], csv::parse_double(r[2]), csv::parse_double(r[3])});
    }
    return out;
}

csv::Table CampaignResult::table() const
{
    csv::Table t({"snr", "method", "parameter", "mean_realized_cost", "mean_pred_error", "pred_error_variance",
                  "realizations", "failures"});
    for (const auto& r : rows) {
        t.row({csv::format_double(r.snr), r.method, csv::format_double(r.parameter),
               csv::format_double(r.mean_realized_cost), csv::format_double(r.mean_prediction_error),
               csv::format_double(r.prediction_error_variance), std::to_string(r.realizations),
               std::to_string(r.failures)});
    }
    return t;
}

const TestRow& CampaignResult::find(double snr, const std::string& method) const
{
    for (const auto& r : rows) {
        if (r.snr == snr && r.method == method) return r;
    }
    throw ParameterError("CampaignResult: no row for " + method + " at SNR " + csv::format_double(snr));
}

CampaignResult run_test(const ExperimentConfig& config, const std::vector<ChosenParameter>& chosen)
{
    const CaseStudy cs = make_case_study(config);
    const auto N = static_cast<std::size_t>(config.test_realizations);
    CampaignResult out;
    for (std::size_t s = 0; s < config.snr_list.size(); ++s) {
        const double snr = config.snr_list[s];
        std::vector<control::Method> methods;
        std::vector<double> params;
        for (const auto& name : config.methods) {
            auto it = std::find_if(chosen.begin(), chosen.end(), [&](const ChosenParameter& c) {
                return c.method == name && std::abs(c.snr - snr) <= 1e-12 * std::abs(snr);
            });
            if (it == chosen.end()) {
                throw ParameterError("run_test: no chosen parameter for " + name + " at SNR " + csv::format_double(snr));
            }
            methods.push_back(control::method_from_string(name));
            params.push_back(it->parameter);
        }
        std::vector<std::vector<PlanScore>> scores(N);
        kernels::parallel_for(N, config.jobs, [&](std::size_t i) {
            const Realization r = make_realization(cs, config, snr, realization_seed(config.seed, Stage::test, s, i));
            for (std::size_t k = 0; k < methods.size(); ++k) {
                scores[i].push_back(evaluate(cs, config, r, methods[k], params[k]));
            }
        });
        for (std::size_t k = 0; k < methods.size(); ++k) {
            std::vector<double> cost;
            std::vector<double> pred;
            int failures = 0;
            for (std::size_t i = 0; i < N; ++i) {
                if (scores[i][k].ok) {
                    cost.push_back(scores[i][k].realized_cost);
                    pred.push_back(scores[i][k].prediction_error);
                } else {
                    ++failures;
                }
            }
            check_failures(failures, static_cast<int>(N), config.max_failure_fraction, "test " + config.methods[k]);
            out.rows.push_back(TestRow{snr, config.methods[k], params[k], mean_of(cost), mean_of(pred),
                                       variance_of(pred), static_cast<int>(cost.size()), failures});
        }
    }
    return out;
}

csv::Table eigencurves(const EigencurveConfig& config, double* max_mismatch)
{
    if (config.sigmas.empty() || !(config.alpha > 0.0)) {
        throw ParameterError("eigencurves: need singular values and a positive alpha");
    }
    for (double s : config.sigmas) {
        if (!(s > 0.0)) throw ParameterError("eigencurves: singular values must be positive");
    }
    const Index r = static_cast<Index>(config.sigmas.size());
    // Synthetic H = U diag(sigma) V^T with fixed orthonormal factors.
    plant::NoiseSource src(20240611);
    const Matrix U = Eigen::HouseholderQR<Matrix>(Matrix(Matrix::NullaryExpr(r, r, [&] { return src.gaussian(1, 1.0)(0); })))
                         .householderQ();
    const Matrix V = Eigen::HouseholderQR<Matrix>(
                         Matrix(Matrix::NullaryExpr(2 * r, r, [&] { return src.gaussian(1, 1.0)(0); })))
                         .householderQ() *
                     Matrix::Identity(2 * r, r);
    const Matrix H = U * to_vector(config.sigmas).asDiagonal() * V.transpose();
    const Matrix I = Matrix::Identity(r, r);

    // Ascending sigma order matches ascending eigenvalues of both maps.
    std::vector<std::size_t> order(config.sigmas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return config.sigmas[a] < config.sigmas[b]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    csv::Table table({"delta", "sigma", "lambda_squared", "lambda_quadratic", "lambda_squared_explicit", "lambda_quadratic_explicit"});
    double worst = 0.0;
    for (double delta : logspace(config.delta_min, config.delta_max, config.points)) {
        const double alpha_hat = config.alpha * delta;
        const SoftProjector proj = soft_projector(H, I, delta);
        const Matrix m_sq = control::soft_squared_map(proj, I, config.alpha);
        const Matrix m_quad = control::soft_quadratic_map(proj, I, alpha_hat);
        const Vector e_sq = Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(m_sq), Eigen::EigenvaluesOnly).eigenvalues();
        const Vector e_quad = Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(m_quad), Eigen::EigenvaluesOnly).eigenvalues();
        for (std::size_t i = 0; i < config.sigmas.size(); ++i) {
            const double s = config.sigmas[i];
            const double l8 = control::soft_squared_eigenvalue(s, delta, config.alpha);
            const double l9 = control::soft_quadratic_eigenvalue(s, delta, alpha_hat);
            const double x8 = e_sq(static_cast<Index>(rank[i]));
            const double x9 = e_quad(static_cast<Index>(rank[i]));
            worst = std::max({worst, std::abs(l8 - x8), std::abs(l9 - x9)});
            table.row(std::vector<double>{delta, s, l8, l9, x8, x9});
        }
    }
    if (max_mismatch) *max_mismatch = worst;
    return table;
}

NoiseDecomposition bound_instance(const ExperimentConfig& config, std::uint64_t seed, bool with_noise)
{
    const BoundConfig& bc = config.bound;
    if (bc.L < 2 || bc.columns < 1 || !(bc.snr > 0.0)) {
        throw ParameterError("bound: L must be at least 2, columns and snr positive");
    }
    const plant::PlantModel model = plant::case_study_plant(config.plant);
    const Signature sig{model.m(), model.p(), bc.L};
    const auto perm = control_permutation(sig, 1);
    const Matrix B = behavior_basis(model.A, model.B, model.C, bc.L).permuted(perm).basis();

    // Gaussian coefficients keep S well conditioned; every column of B S is
    // an exact trajectory of the plant.
    plant::NoiseSource src(seed);
    Matrix S(B.cols(), bc.columns);
    for (Index j = 0; j < S.cols(); ++j) S.col(j) = src.gaussian(S.rows(), 1.0);
    Matrix E = Matrix::Zero(B.rows(), bc.columns);
    if (with_noise) {
        const double signal_var = (B * S).squaredNorm() / static_cast<double>(B.rows() * S.cols());
        const double std = std::sqrt(signal_var / bc.snr);
        for (Index j = 0; j < E.cols(); ++j) E.col(j) = src.gaussian(E.rows(), std);
    }
    return NoiseDecomposition(B, S, E);
}

BoundSweep run_bound(const ExperimentConfig& config)
{
    const BoundConfig& bc = config.bound;
    const std::uint64_t seed = realization_seed(config.seed, Stage::bound, 0, 0);
    const NoiseDecomposition noisy = bound_instance(config, seed, true);
    const NoiseDecomposition clean = bound_instance(config, seed, false);
    const Index n = noisy.B.rows();
    Matrix W = Matrix::Identity(n, n);
    if (bc.weighted) {
        W = control::make_weights(to_matrix(config.Q), to_matrix(config.R), config.lambda_sigma, 1, bc.L - 1).W;
    }
    const Subspace behavior(noisy.B, true);
    const Matrix P_true = weighted_projector(behavior, W);

    BoundSweep out;
    std::vector<double> gammas;
    for (double delta : logspace(bc.delta_min, bc.delta_max, bc.points)) {
        for (int pass = 0; pass < 2; ++pass) {
            const NoiseDecomposition& dec = pass == 0 ? noisy : clean;
            const BoundReport rep = error_bound(dec, W, delta);
            const double gap = linalg::spectral_norm(soft_projector(dec.data(), W, delta).P - P_true);
            if (gap > rep.gamma * (1.0 + 1e-10) + 1e-12) {
                ++out.violations;
            }
            append_bound_row(pass == 0 ? out.noisy : out.noise_free, rep, gap);
            if (pass == 0) gammas.push_back(rep.gamma);
        }
    }
    const auto it = std::min_element(gammas.begin(), gammas.end());
    const std::size_t k = static_cast<std::size_t>(it - gammas.begin());
    bool unimodal = k > 0 && k + 1 < gammas.size();
    for (std::size_t i = 1; i < gammas.size() && unimodal; ++i) {
        unimodal = i <= k ? gammas[i] <= gammas[i - 1] : gammas[i] >= gammas[i - 1];
    }
    out.interior_minimum = unimodal;
    return out;
}

OnlinePair run_online(const ExperimentConfig& config, std::uint64_t seed)
{
    const CaseStudy cs = make_case_study(config);
    const OnlineSettings& os = config.online;
    plant::TwoDiscParams after = config.plant;
    after.k *= os.stiffness_scale;
    after.k_ground *= os.stiffness_scale;

    plant::NoiseConfig noise;
    noise.process_std = Vector::Constant(cs.plant.disturbances(), config.process_std);
    noise.snr_target = config.snr_list.front();
    noise.seed = splitmix64(seed);
    const plant::ExcitationData initial =
        plant::collect_excitation_data(cs.plant, os.initial_length, config.input_std, noise);

    control::OnlineConfig oc;
    oc.controller.weights = cs.weights;
    oc.controller.config.method = control::method_from_string(os.method);
    oc.controller.config.alpha = config.alpha;
    oc.controller.config.alpha_hat = config.alpha_hat;
    oc.controller.u_ref = cs.u_ref;
    oc.controller.y_ref = cs.y_ref;
    const bool explicit_deepc = oc.controller.config.method == control::Method::deepc_l2 ||
                                oc.controller.config.method == control::Method::deepc_projected;
    if (explicit_deepc) {
        oc.controller.config.method = control::Method::deepc_l2;
    } else {
        oc.controller.box = cs.box;
        oc.projector_weight = Matrix::Identity(cs.weights.W.rows(), cs.weights.W.cols());
    }
    oc.epsilon = config.epsilon;
    oc.rebase_every = os.rebase_every;
    oc.T_sim = os.T_sim;
    oc.reference_period = os.reference_period;
    oc.plant_after = plant::case_study_plant(after);
    oc.switch_step = os.switch_step;
    oc.process_std = noise.process_std;
    oc.measurement_std = initial.measurement_std;
    oc.dither_std = os.dither_std;
    oc.seed = splitmix64(seed ^ 0x0411ULL);

    OnlinePair pair;
    oc.adapt = true;
    pair.adaptive = control::online_control_loop(cs.plant, initial, oc);
    oc.adapt = false;
    pair.frozen = control::online_control_loop(cs.plant, initial, oc);
    return pair;
}

csv::Table online_summary(const std::vector<OnlinePair>& runs, long from)
{
    csv::Table t({"run", "adaptive_second_half", "frozen_second_half", "adaptive_final_drift"});
    for (std::size_t i = 0; i < runs.size(); ++i) {
        t.row(std::vector<double>{static_cast<double>(i), runs[i].adaptive.cost_from(from),
                                  runs[i].frozen.cost_from(from), runs[i].adaptive.final_drift});
    }
    return t;
}

}  // namespace softproj::experiment
