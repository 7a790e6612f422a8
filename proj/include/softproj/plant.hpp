#pragma once

#include "softproj/behavior.hpp"
#include "softproj/linalg.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace softproj::plant {

/// x+ = A x + B u + E d,  y = C x + v.
struct PlantModel {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix E;  ///< disturbance input map (n x w_d)
    double dt = 1.0;

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }
    Index disturbances() const { return E.cols(); }

    /// Throws DimensionError on non-conformal matrices.
    void validate() const;

    bool reachable() const;
    bool observable() const;
};

struct NoiseConfig {
    Vector process_std;      ///< per disturbance channel (empty = no process noise)
    Vector measurement_std;  ///< per output (empty = no measurement noise)
    std::optional<double> snr_target;
    std::uint64_t seed = 0;

    /// Throws ParameterError on negative deviations or a non-positive SNR.
    void validate() const;
};

/// Zero-mean white Gaussian noise streams for one realization.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

    Vector gaussian(const Vector& stddev);
    Vector gaussian(Index size, double stddev);

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct StepResult {
    Vector x_next;
    Vector y;
};

StepResult step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& disturbance,
                const Vector& measurement_noise);

/// Noise-free step.
StepResult step(const PlantModel& model, const Vector& x, const Vector& u);

/// Noise-free output sequence (p x T) for inputs u (m x T) from x0.
Signal simulate(const PlantModel& model, const Vector& x0, const Signal& u);

/// Final state after applying u (m x T) from x0 without noise.
Vector propagate(const PlantModel& model, const Vector& x0, const Signal& u);

struct ExcitationData {
    Signal u;         ///< m x T applied inputs
    Signal y;         ///< p x T measured outputs
    Signal y_signal;  ///< p x T outputs before measurement noise
    Vector measurement_std;
    Vector x_final;   ///< state after the last input
};

/// White-noise excitation from the zero state. When noise.snr_target is set,
/// the measurement noise is calibrated per output channel against y_signal,
/// overriding noise.measurement_std.
ExcitationData collect_excitation_data(const PlantModel& model, Index T, double input_std, const NoiseConfig& noise);

/// Per-channel std with var(signal_i) / std_i^2 = snr. Signal is channels x
/// samples. Throws CalibrationError for a zero-variance channel.
Vector calibrate_snr(const Signal& signal, double snr);

/// Two inertias in a chain ground - disc 1 - disc 2 coupled by torsional
/// springs, both damped to ground, torque input on the first disc and
/// disturbance torques on both.
struct TwoDiscParams {
    double J1 = 1.0;
    double J2 = 1.0;
    double k = 1.0;         ///< spring between the discs
    double k_ground = 0.0;  ///< spring from disc 1 to ground
    double c = 0.1;
    double c_ground = 0.1;
    double dt = 0.1;

    bool operator==(const TwoDiscParams&) const = default;
};

/// ZOH discretization of the two-disc plant; states (theta1, theta2, omega1,
/// omega2), outputs (theta1, theta2).
PlantModel case_study_plant(const TwoDiscParams& params = {});

/// Zero-order-hold discretization of x' = Ac x + Bc u + Ec d.
PlantModel discretize_zoh(const Matrix& Ac, const Matrix& Bc, const Matrix& Cc, const Matrix& Ec, double dt);

}  // namespace softproj::plant
