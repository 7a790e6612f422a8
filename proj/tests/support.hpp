#pragma once

#include "softproj/linalg.hpp"
#include "softproj/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace testing {

using softproj::Index;
using softproj::Matrix;
using softproj::Vector;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double normal() { return normal_(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

    Matrix gaussian(Index rows, Index cols)
    {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Vector gaussian(Index n) { return gaussian(n, 1).col(0); }

    /// SPD with eigenvalues in [lo, hi].
    Matrix spd(Index n, double lo = 0.5, double hi = 5.0)
    {
        const Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
        const Matrix Q = qr.householderQ();
        Vector ev(n);
        for (Index i = 0; i < n; ++i) ev(i) = uniform(lo, hi);
        return Q * ev.asDiagonal() * Q.transpose();
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double rel_diff(const Matrix& a, const Matrix& b)
{
    const double scale = std::max(a.norm(), b.norm());
    return scale > 0.0 ? (a - b).norm() / scale : 0.0;
}

/// Random stable, reachable and observable system with spectral radius < 0.9.
inline softproj::plant::PlantModel random_system(Rng& rng, Index n, Index m, Index p)
{
    softproj::plant::PlantModel sys;
    for (;;) {
        Matrix A = rng.gaussian(n, n);
        const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
        sys.A = A * (rng.uniform(0.3, 0.9) / rho);
        sys.B = rng.gaussian(n, m);
        sys.C = rng.gaussian(p, n);
        sys.E = Matrix::Zero(n, 1);
        if (sys.reachable() && sys.observable()) return sys;
    }
}

/// Exact minimizer of 1/2 x'Px + q'x over lo <= x <= hi for SPD P. The
/// active set comes from projected Gauss-Seidel; the point is then solved
/// exactly on that set and checked against the KKT sign conditions. If the
/// check fails every free/lower/upper pattern is enumerated (small n only).
inline Vector box_qp_oracle(const Matrix& P, const Vector& q, const Vector& lo, const Vector& hi)
{
    const Index n = q.size();
    auto solve_pattern = [&](const std::vector<int>& pat, Vector& x) {
        // pat: 0 free, -1 at lower, +1 at upper
        std::vector<Index> freeIdx;
        x.resize(n);
        for (Index i = 0; i < n; ++i) {
            if (pat[static_cast<std::size_t>(i)] < 0) x(i) = lo(i);
            else if (pat[static_cast<std::size_t>(i)] > 0) x(i) = hi(i);
            else freeIdx.push_back(i);
        }
        if (!freeIdx.empty()) {
            const Index f = static_cast<Index>(freeIdx.size());
            Matrix Pf(f, f);
            Vector rhs(f);
            for (Index a = 0; a < f; ++a) {
                rhs(a) = -q(freeIdx[static_cast<std::size_t>(a)]);
                for (Index j = 0; j < n; ++j) {
                    if (pat[static_cast<std::size_t>(j)] != 0) rhs(a) -= P(freeIdx[static_cast<std::size_t>(a)], j) * x(j);
                }
                for (Index b = 0; b < f; ++b) Pf(a, b) = P(freeIdx[static_cast<std::size_t>(a)], freeIdx[static_cast<std::size_t>(b)]);
            }
            const Vector xf = Pf.ldlt().solve(rhs);
            for (Index a = 0; a < f; ++a) x(freeIdx[static_cast<std::size_t>(a)]) = xf(a);
        }
        const Vector grad = P * x + q;
        const double tol = 1e-9 * (1.0 + grad.cwiseAbs().maxCoeff());
        for (Index i = 0; i < n; ++i) {
            const int s = pat[static_cast<std::size_t>(i)];
            if (s == 0 && (x(i) < lo(i) - 1e-12 || x(i) > hi(i) + 1e-12)) return false;
            if (s < 0 && grad(i) < -tol) return false;
            if (s > 0 && grad(i) > tol) return false;
        }
        return true;
    };

    Vector x = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) x(i) = std::clamp(0.0, lo(i), hi(i));
    for (int sweep = 0; sweep < 20000; ++sweep) {
        double change = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double xi = std::clamp(x(i) - (P.row(i).dot(x) + q(i)) / P(i, i), lo(i), hi(i));
            change = std::max(change, std::abs(xi - x(i)));
            x(i) = xi;
        }
        if (change < 1e-15) break;
    }
    std::vector<int> pat(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
        if (x(i) <= lo(i)) pat[static_cast<std::size_t>(i)] = -1;
        else if (x(i) >= hi(i)) pat[static_cast<std::size_t>(i)] = 1;
    }
    Vector exact;
    if (solve_pattern(pat, exact)) return exact;

    std::vector<int> enumerate(static_cast<std::size_t>(n), -1);
    for (;;) {
        if (solve_pattern(enumerate, exact)) return exact;
        std::size_t k = 0;
        while (k < enumerate.size() && enumerate[k] == 1) enumerate[k++] = -1;
        if (k == enumerate.size()) break;
        ++enumerate[k];
    }
    return x;
}

}  // namespace testing
