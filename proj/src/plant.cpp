#include "softproj/plant.hpp"

#include "softproj/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace softproj::plant {

void PlantModel::validate() const
{
    const Index nx = A.rows();
    if (nx == 0 || A.cols() != nx || B.rows() != nx || C.cols() != nx || (E.size() > 0 && E.rows() != nx)) {
        throw DimensionError("PlantModel: A (n x n), B (n x m), C (p x n), E (n x w) are not conformal");
    }
    if (B.cols() < 1 || C.rows() < 1) {
        throw DimensionError("PlantModel: need at least one input and one output");
    }
}

bool PlantModel::reachable() const
{
    const Index nx = n();
    Matrix ctrb(nx, nx * m());
    Matrix ak = B;
    for (Index i = 0; i < nx; ++i) {
        ctrb.middleCols(i * m(), m()) = ak;
        ak = A * ak;
    }
    return linalg::numerical_rank(ctrb) == nx;
}

bool PlantModel::observable() const
{
    const Index nx = n();
    Matrix obs(nx * p(), nx);
    Matrix ca = C;
    for (Index i = 0; i < nx; ++i) {
        obs.middleRows(i * p(), p()) = ca;
        ca = ca * A;
    }
    return linalg::numerical_rank(obs) == nx;
}

void NoiseConfig::validate() const
{
    if ((process_std.size() > 0 && process_std.minCoeff() < 0.0) ||
        (measurement_std.size() > 0 && measurement_std.minCoeff() < 0.0)) {
        throw ParameterError("NoiseConfig: standard deviations must be non-negative");
    }
    if (snr_target && !(*snr_target > 0.0)) {
        throw ParameterError("NoiseConfig: snr_target must be positive");
    }
}

Vector NoiseSource::gaussian(const Vector& stddev)
{
    Vector out(stddev.size());
    for (Index i = 0; i < stddev.size(); ++i) {
        out(i) = stddev(i) * normal_(rng_);
    }
    return out;
}

Vector NoiseSource::gaussian(Index size, double stddev)
{
    return gaussian(Vector::Constant(size, stddev));
}

StepResult step(const PlantModel& model, const Vector& x, const Vector& u, const Vector& disturbance,
                const Vector& measurement_noise)
{
    if (x.size() != model.n() || u.size() != model.m()) {
        throw DimensionError("plant::step: state or input has the wrong size");
    }
    if (disturbance.size() != 0 && disturbance.size() != model.disturbances()) {
        throw DimensionError("plant::step: disturbance has the wrong size");
    }
    if (measurement_noise.size() != 0 && measurement_noise.size() != model.p()) {
        throw DimensionError("plant::step: measurement noise has the wrong size");
    }
    StepResult r;
    r.x_next = model.A * x + model.B * u;
    if (disturbance.size() != 0) {
        r.x_next += model.E * disturbance;
    }
    r.y = model.C * x;
    if (measurement_noise.size() != 0) {
        r.y += measurement_noise;
    }
    return r;
}

StepResult step(const PlantModel& model, const Vector& x, const Vector& u)
{
    return step(model, x, u, Vector(), Vector());
}

Signal simulate(const PlantModel& model, const Vector& x0, const Signal& u)
{
    Signal y(model.p(), u.cols());
    Vector x = x0;
    for (Index t = 0; t < u.cols(); ++t) {
        StepResult r = step(model, x, u.col(t));
        y.col(t) = r.y;
        x = r.x_next;
    }
    return y;
}

Vector propagate(const PlantModel& model, const Vector& x0, const Signal& u)
{
    Vector x = x0;
    for (Index t = 0; t < u.cols(); ++t) {
        x = model.A * x + model.B * u.col(t);
    }
    return x;
}

Vector calibrate_snr(const Signal& signal, double snr)
{
    if (!(snr > 0.0)) {
        throw CalibrationError("calibrate_snr: SNR must be positive");
    }
    if (signal.cols() < 2) {
        throw CalibrationError("calibrate_snr: need at least two samples");
    }
    Vector out(signal.rows());
    for (Index i = 0; i < signal.rows(); ++i) {
        const double mean = signal.row(i).mean();
        const double var = (signal.row(i).array() - mean).square().sum() / static_cast<double>(signal.cols() - 1);
        if (!(var > 0.0)) {
            throw CalibrationError("calibrate_snr: channel " + std::to_string(i) + " has zero variance");
        }
        out(i) = std::sqrt(var / snr);
    }
    return out;
}

ExcitationData collect_excitation_data(const PlantModel& model, Index T, double input_std, const NoiseConfig& noise)
{
    model.validate();
    noise.validate();
    if (T < 1) {
        throw InsufficientDataError("collect_excitation_data: T must be at least 1");
    }
    if (noise.process_std.size() != 0 && noise.process_std.size() != model.disturbances()) {
        throw DimensionError("collect_excitation_data: process_std must have one entry per disturbance channel");
    }
    if (noise.measurement_std.size() != 0 && noise.measurement_std.size() != model.p()) {
        throw DimensionError("collect_excitation_data: measurement_std must have one entry per output");
    }
    NoiseSource src(noise.seed);
    ExcitationData d;
    d.u.resize(model.m(), T);
    d.y_signal.resize(model.p(), T);
    Vector x = Vector::Zero(model.n());
    for (Index t = 0; t < T; ++t) {
        d.u.col(t) = src.gaussian(model.m(), input_std);
        const Vector w = noise.process_std.size() ? src.gaussian(noise.process_std) : Vector();
        StepResult r = step(model, x, d.u.col(t), w, Vector());
        d.y_signal.col(t) = r.y;
        x = r.x_next;
    }
    d.x_final = x;
    if (noise.snr_target) {
        d.measurement_std = calibrate_snr(d.y_signal, *noise.snr_target);
    } else if (noise.measurement_std.size()) {
        d.measurement_std = noise.measurement_std;
    } else {
        d.measurement_std = Vector::Zero(model.p());
    }
    d.y = d.y_signal;
    if (d.measurement_std.maxCoeff() > 0.0) {
        for (Index t = 0; t < T; ++t) {
            d.y.col(t) += src.gaussian(d.measurement_std);
        }
    }
    return d;
}

PlantModel discretize_zoh(const Matrix& Ac, const Matrix& Bc, const Matrix& Cc, const Matrix& Ec, double dt)
{
    if (!(dt > 0.0)) {
        throw ParameterError("discretize_zoh: dt must be positive");
    }
    const Index n = Ac.rows();
    const Index m = Bc.cols();
    const Index w = Ec.cols();
    Matrix aug = Matrix::Zero(n + m + w, n + m + w);
    aug.topLeftCorner(n, n) = Ac;
    aug.block(0, n, n, m) = Bc;
    if (w > 0) {
        aug.block(0, n + m, n, w) = Ec;
    }
    const Matrix phi = (aug * dt).exp();
    PlantModel model;
    model.A = phi.topLeftCorner(n, n);
    model.B = phi.block(0, n, n, m);
    model.E = w > 0 ? Matrix(phi.block(0, n + m, n, w)) : Matrix(n, 0);
    model.C = Cc;
    model.dt = dt;
    model.validate();
    return model;
}

PlantModel case_study_plant(const TwoDiscParams& prm)
{
    if (!(prm.J1 > 0.0) || !(prm.J2 > 0.0) || prm.k < 0.0 || prm.k_ground < 0.0 || prm.c < 0.0 || prm.c_ground < 0.0) {
        throw ParameterError("case_study_plant: inertias must be positive and coefficients non-negative");
    }
    Matrix Ac = Matrix::Zero(4, 4);
    Ac(0, 2) = 1.0;
    Ac(1, 3) = 1.0;
    Ac(2, 0) = -(prm.k + prm.k_ground) / prm.J1;
    Ac(2, 1) = prm.k / prm.J1;
    Ac(2, 2) = -(prm.c + prm.c_ground) / prm.J1;
    Ac(2, 3) = prm.c / prm.J1;
    Ac(3, 0) = prm.k / prm.J2;
    Ac(3, 1) = -prm.k / prm.J2;
    Ac(3, 2) = prm.c / prm.J2;
    Ac(3, 3) = -(prm.c + prm.c_ground) / prm.J2;
    Matrix Bc = Matrix::Zero(4, 1);
    Bc(2, 0) = 1.0 / prm.J1;
    Matrix Ec = Matrix::Zero(4, 2);
    Ec(2, 0) = 1.0 / prm.J1;
    Ec(3, 1) = 1.0 / prm.J2;
    Matrix Cc = Matrix::Zero(2, 4);
    Cc(0, 0) = 1.0;
    Cc(1, 1) = 1.0;
    return discretize_zoh(Ac, Bc, Cc, Ec, prm.dt);
}

}  // namespace softproj::plant
