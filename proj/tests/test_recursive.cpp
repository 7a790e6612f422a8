#include "softproj/errors.hpp"
#include "softproj/recursive.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace softproj;
using testing::Rng;
using testing::rel_diff;

namespace {

Matrix batch_projector(const Matrix& H, const Matrix& W, double delta)
{
    const Matrix inner = H.transpose() * W * H + delta * Matrix::Identity(H.cols(), H.cols());
    return H * inner.ldlt().solve(H.transpose());
}

}  // namespace

TEST_CASE("init from a single column")
{
    Vector h(3);
    h << 1.0, -2.0, 0.5;
    const double eps = 0.01;
    const RecursiveProjector r = RecursiveProjector::init(Matrix(h), Matrix::Identity(3, 3), eps);
    const Matrix expected = h * h.transpose() / (h.squaredNorm() + eps * h.squaredNorm());
    CHECK((r.P() - expected).norm() <= 1e-14);
    CHECK(r.trace() == doctest::Approx(h.squaredNorm()).epsilon(1e-12));
    CHECK(r.delta() == doctest::Approx(eps * h.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("init matches the direct batch form")
{
    Rng rng(41);
    const Matrix H = rng.gaussian(12, 60);
    const Matrix W = rng.spd(12);
    const RecursiveProjector r = RecursiveProjector::init(H, W, 1e-3);
    CHECK(r.trace() == doctest::Approx(H.squaredNorm()).epsilon(1e-12));
    CHECK(rel_diff(r.P(), soft_projector_direct(H, W, r.delta()).P) <= 1e-10);

    CHECK_THROWS_AS(RecursiveProjector::init(Matrix(12, 0), W), InsufficientDataError);
    CHECK_THROWS_AS(RecursiveProjector::init(H, W, 0.0), ParameterError);
}

TEST_CASE("delta schedule")
{
    // delta_{t-1} = 1, eps = 0.01, ||w||^2 = 4 -> 1.04.
    Vector h = Vector::Zero(2);
    h(0) = 10.0;
    RecursiveProjector r = RecursiveProjector::init(Matrix(h), Matrix::Identity(2, 2), 0.01);
    REQUIRE(r.delta() == doctest::Approx(1.0));
    Vector w(2);
    w << 0.0, 2.0;
    r.update(w);
    CHECK(r.delta() == doctest::Approx(1.04).epsilon(1e-14));
    CHECK(r.step() == 1);

    Rng rng(42);
    double last = r.delta();
    for (int k = 0; k < 20; ++k) {
        r.update(rng.gaussian(2));
        CHECK(r.delta() > last);
        CHECK(std::abs(r.delta() - r.epsilon() * r.trace()) <= 1e-12 * r.delta());
        last = r.delta();
    }
}

TEST_CASE("explained data leaves the projector unchanged")
{
    // w_tilde = 0, so the rank-one term vanishes.
    Rng rng(43);
    const Matrix H = rng.gaussian(4, 30);
    RecursiveProjector r = RecursiveProjector::init(H, Matrix::Identity(4, 4), 1e-3);
    r.set_frozen_schedule(true);
    const Matrix before = r.P();
    r.update(Vector::Zero(4));
    CHECK((r.P() - before).norm() == 0.0);
}

TEST_CASE("frozen schedule reproduces the batch projector")
{
    Rng rng(44);
    const Matrix H = rng.gaussian(10, 20);
    const Matrix W = rng.spd(10);
    RecursiveProjector r = RecursiveProjector::init(H, W, 1e-2);
    r.set_frozen_schedule(true);
    const double delta = r.delta();
    Matrix all = H;
    for (int k = 0; k < 50; ++k) {
        const Vector w = rng.gaussian(10);
        r.update(w);
        all.conservativeResize(Eigen::NoChange, all.cols() + 1);
        all.col(all.cols() - 1) = w;
    }
    CHECK(r.delta() == delta);
    const Matrix batch = batch_projector(all, W, delta);
    CHECK((r.P() - batch).norm() <= 1e-6);
    CHECK(rel_diff(r.P(), batch) <= 1e-8);
    CHECK(linalg::asymmetry(r.P()) <= 1e-9);
}

TEST_CASE("live schedule drifts and rebase restores the batch value")
{
    Rng rng(45);
    const Matrix H = rng.gaussian(8, 30);
    const Matrix W = rng.spd(8);
    RecursiveProjector r = RecursiveProjector::init(H, W, 1e-3);
    CHECK(r.drift() <= 1e-12);

    const Matrix before = r.P();
    r.rebase();
    CHECK((r.P() - before).norm() <= 1e-12 * before.norm());

    Matrix all = H;
    for (int k = 0; k < 100; ++k) {
        const Vector w = rng.gaussian(8);
        r.update(w);
        all.conservativeResize(Eigen::NoChange, all.cols() + 1);
        all.col(all.cols() - 1) = w;
        const Vector ev = r.projector().weighted_spectrum();
        CHECK(ev.minCoeff() >= -1e-12);
        CHECK(ev.maxCoeff() < 1.0);
    }
    CHECK(r.drift() > 0.0);
    r.rebase();
    CHECK(rel_diff(r.P(), batch_projector(all, W, r.delta())) <= 1e-10);
    const Matrix once = r.P();
    r.rebase();
    CHECK(r.P() == once);
}

TEST_CASE("update rejects a wrong trajectory length")
{
    Rng rng(46);
    RecursiveProjector r = RecursiveProjector::init(rng.gaussian(3, 10), Matrix::Identity(3, 3));
    CHECK_THROWS_AS(r.update(Vector::Zero(4)), DimensionError);
}

TEST_CASE("checkpoint round trip")
{
    Rng rng(47);
    RecursiveProjector r = RecursiveProjector::init(rng.gaussian(5, 12), rng.spd(5), 2e-3);
    for (int k = 0; k < 7; ++k) r.update(rng.gaussian(5));
    const auto dir = std::filesystem::temp_directory_path() / "softproj_checkpoint_test";
    std::filesystem::remove_all(dir);
    r.save(dir);
    RecursiveProjector back = RecursiveProjector::load(dir);
    CHECK(back.P() == r.P());
    CHECK(back.delta() == r.delta());
    CHECK(back.trace() == r.trace());
    CHECK(back.step() == r.step());
    const Vector w = rng.gaussian(5);
    r.update(w);
    back.update(w);
    CHECK(back.P() == r.P());
    std::filesystem::remove_all(dir);
}

TEST_CASE("excitation monitor")
{
    Rng rng(48);
    const Matrix H = rng.gaussian(4, 40);
    const RecursiveProjector r = RecursiveProjector::init(H, Matrix::Identity(4, 4));
    const double expected = Eigen::SelfAdjointEigenSolver<Matrix>(H * H.transpose()).eigenvalues()(0);
    CHECK(r.gram_sigma_min() == doctest::Approx(expected).epsilon(1e-10));
}
