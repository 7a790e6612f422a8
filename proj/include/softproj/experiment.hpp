#pragma once

#include "softproj/closed_loop.hpp"
#include "softproj/control.hpp"
#include "softproj/csv.hpp"
#include "softproj/plant.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace softproj::experiment {

struct EigencurveConfig {
    std::vector<double> sigmas{1000.0, 100.0, 50.0, 30.0, 20.0};
    double alpha = 1e6;  ///< alpha for the squared form; alpha_hat = alpha * delta
    double delta_min = 1e-3;
    double delta_max = 1e3;
    int points = 40;

    bool operator==(const EigencurveConfig&) const = default;
};

struct BoundConfig {
    int L = 6;
    int columns = 200;
    double snr = 100.0;
    double delta_min = 1e-3;
    double delta_max = 1e3;
    int points = 13;
    bool weighted = false;  ///< use the control W instead of the identity

    bool operator==(const BoundConfig&) const = default;
};

struct OnlineSettings {
    long T_sim = 400;
    int initial_length = 200;
    double stiffness_scale = 3.0;  ///< both springs are multiplied by this at switch_step
    long switch_step = 200;  ///< negative: no plant change
    double dither_std = 0.2;
    long reference_period = 40;
    long rebase_every = 100;
    std::string method = "deepc_l2";
    int runs = 1;

    bool operator==(const OnlineSettings&) const = default;
};

struct ExperimentConfig {
    plant::TwoDiscParams plant;
    int T_ini = 2;
    int T_f = 12;
    std::vector<std::vector<double>> Q{{1.0, 0.0}, {0.0, 1.0}};
    std::vector<std::vector<double>> R{{0.01}};
    double lambda_sigma = 1e6;
    std::vector<double> y_ref{0.8, 0.8};
    std::vector<double> u_ref{0.0};
    bool constraints = true;
    double u_min = -2.0;
    double u_max = 2.0;
    double y_min = -1.0;
    double y_max = 1.0;

    int data_length = 1000;
    double input_std = 1.0;
    double process_std = 0.05;
    bool noisy_initial = false;  ///< measure y_ini with the calibrated noise

    std::vector<std::string> methods{"deepc_l2", "soft_squared"};
    std::vector<double> lambda_g_grid;
    std::vector<double> delta_grid;
    double alpha = 1e6;
    double alpha_hat = 1e5;
    double epsilon = 1e-3;

    std::vector<double> snr_list{10.0, 5.0, 3.0};
    int validation_realizations = 100;
    int test_realizations = 100;
    std::uint64_t seed = 1;
    int jobs = 1;
    double max_failure_fraction = 0.1;
    std::string output_dir = "out";

    EigencurveConfig eigencurves;
    BoundConfig bound;
    OnlineSettings online;

    ExperimentConfig();

    /// Throws ParameterError on empty grids or non-positive sizes.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// n log-spaced points from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults.
ExperimentConfig config_from_json(const std::string& text);

/// Seed for one realization. Validation and test draw from disjoint index
/// ranges, so their streams never coincide.
enum class Stage { validation = 0, test = 1, online = 2, bound = 3 };
std::uint64_t realization_seed(std::uint64_t master, Stage stage, std::size_t snr_index, std::size_t index);

/// Plant, weights and constraints shared by every realization.
struct CaseStudy {
    plant::PlantModel plant;
    control::ControlWeights weights;
    control::Box box;
    Vector u_ref;
    Vector y_ref;
};

CaseStudy make_case_study(const ExperimentConfig& config);

/// One noisy data set together with the measured initial trajectory.
struct Realization {
    DataMatrix data;
    Matrix gram;  ///< H H^T in control order
    control::ControlTarget target;
    Vector measurement_std;
};

Realization make_realization(const CaseStudy& cs, const ExperimentConfig& config, double snr, std::uint64_t seed);

/// Prediction error and realized cost of a plan, both from the noise-free
/// plant response to the planned inputs starting at rest.
struct PlanScore {
    double realized_cost = 0.0;
    double prediction_error = 0.0;
    bool ok = false;
};

PlanScore score_plan(const CaseStudy& cs, const Vector& w_star);

/// Solves one method at one grid value on one realization. Solver failures
/// come back with ok = false.
PlanScore evaluate(const CaseStudy& cs, const ExperimentConfig& config, const Realization& r,
                   control::Method method, double parameter);

/// Name of the tuned parameter for a method ("lambda_g" or "delta").
std::string parameter_name(control::Method method);
const std::vector<double>& parameter_grid(const ExperimentConfig& config, control::Method method);

struct ValidationPoint {
    double snr = 0.0;
    std::string method;
    double parameter = 0.0;
    double mean_realized_cost = 0.0;
    double mean_prediction_error = 0.0;
    int failures = 0;
};

struct ChosenParameter {
    double snr = 0.0;
    std::string method;
    double parameter = 0.0;
    double validation_cost = 0.0;
};

struct ValidationResult {
    std::vector<ValidationPoint> curve;
    std::vector<ChosenParameter> chosen;

    /// snr, method, parameter, mean_realized_cost, mean_pred_error, failures
    csv::Table curve_table() const;
    /// snr, method, parameter, validation_cost
    csv::Table chosen_table() const;
};

/// Smallest grid value whose cost is within rel_tol of the minimum. NaN
/// costs are skipped.
std::size_t select_parameter(const std::vector<double>& grid, const std::vector<double>& costs, double rel_tol = 1e-3);

ValidationResult run_validation(const ExperimentConfig& config);

std::vector<ChosenParameter> read_chosen(const std::filesystem::path& path);

struct TestRow {
    double snr = 0.0;
    std::string method;
    double parameter = 0.0;
    double mean_realized_cost = 0.0;
    double mean_prediction_error = 0.0;
    double prediction_error_variance = 0.0;
    int realizations = 0;
    int failures = 0;
};

struct CampaignResult {
    std::vector<TestRow> rows;

    /// snr, method, parameter, mean_realized_cost, mean_pred_error,
    /// pred_error_variance, realizations, failures
    csv::Table table() const;
    const TestRow& find(double snr, const std::string& method) const;
};

CampaignResult run_test(const ExperimentConfig& config, const std::vector<ChosenParameter>& chosen);

/// Thrown by the campaigns when the failure fraction exceeds the configured limit.
class CampaignError : public Error {
public:
    using Error::Error;
};

/// Long format: delta, sigma, lambda_squared, lambda_quadratic, lambda_squared_explicit,
/// lambda_quadratic_explicit. The explicit columns are eigenvalues of the maps
/// assembled from a synthetic data matrix with the given singular values.
csv::Table eigencurves(const EigencurveConfig& config, double* max_mismatch = nullptr);

/// Synthetic instance with known (B, S, E): B spans the behavior of the
/// case-study plant, S and E are Gaussian with E scaled to the SNR.
NoiseDecomposition bound_instance(const ExperimentConfig& config, std::uint64_t seed, bool with_noise = true);

struct BoundSweep {
    csv::Table noisy = bound_table();
    csv::Table noise_free = bound_table();
    int violations = 0;
    bool interior_minimum = false;
};

BoundSweep run_bound(const ExperimentConfig& config);

struct OnlinePair {
    control::RunLog adaptive;
    control::RunLog frozen;
};

/// Paired adaptive and frozen-projector runs on the same noise streams.
OnlinePair run_online(const ExperimentConfig& config, std::uint64_t seed);

/// run, adaptive_second_half, frozen_second_half, adaptive_final_drift
csv::Table online_summary(const std::vector<OnlinePair>& runs, long from);

}  // namespace softproj::experiment
