#pragma once

#include "softproj/behavior.hpp"
#include "softproj/soft_projection.hpp"

#include <filesystem>

namespace softproj {

/// Online soft projector driven by rank-one updates and the trace schedule
/// delta_t = epsilon * tr(H_t H_t^T).
///
/// Each update costs O((qL)^2): the state keeps the qL x qL projector, the
/// cached inverse and the running Gram matrix H_t H_t^T, never H_t itself.
/// The rank-one step uses delta_{t-1}, so with a moving schedule the state
/// drifts from the batch projector at delta_t; rebase() recomputes from the
/// Gram matrix at the current delta.
///
/// Single writer. Copies are deep and may be shared read-only.
class RecursiveProjector {
public:
    static constexpr double kDefaultEpsilon = 1e-3;

    /// H holds the initial columns in the ordering used for all later updates.
    /// Throws InsufficientDataError for an empty H and ParameterError for
    /// epsilon <= 0.
    static RecursiveProjector init(const Matrix& H, const Matrix& W, double epsilon = kDefaultEpsilon);

    /// Uses the control row ordering of `data`.
    static RecursiveProjector init(const DataMatrix& data, const Matrix& W, double epsilon = kDefaultEpsilon);

    /// Incorporates one new trajectory column.
    void update(const Vector& w_new);

    /// Recomputes projector and cache from the Gram matrix at delta_t.
    void rebase();

    /// Stops (or resumes) the delta schedule. While frozen, delta_t stays
    /// constant and the recursion is exact rank-one algebra.
    void set_frozen_schedule(bool frozen) { frozen_ = frozen; }
    bool frozen_schedule() const { return frozen_; }

    const SoftProjector& projector() const { return projector_; }
    const Matrix& P() const { return projector_.P; }
    double delta() const { return projector_.delta; }
    double epsilon() const { return epsilon_; }
    double trace() const { return trace_; }
    long step() const { return t_; }
    const Matrix& gram() const { return gram_; }

    /// ||P - P_batch(delta_t)||_F / ||P_batch||_F for the data seen so far.
    double drift() const;

    /// Smallest eigenvalue of H_t H_t^T (excitation monitor).
    double gram_sigma_min() const;

    /// Writes P.csv, W.csv, gram.csv, cache.csv and scalars.csv into `dir`.
    void save(const std::filesystem::path& dir) const;
    static RecursiveProjector load(const std::filesystem::path& dir);

private:
    RecursiveProjector() = default;

    SoftProjector projector_;
    Matrix gram_;
    double epsilon_ = kDefaultEpsilon;
    double trace_ = 0.0;
    long t_ = 0;
    bool frozen_ = false;
};

}  // namespace softproj
