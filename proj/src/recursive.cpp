#include "softproj/recursive.hpp"

#include "softproj/csv.hpp"
#include "softproj/errors.hpp"
#include "softproj/kernels.hpp"

#include <cmath>
#include <map>
#include <string>

namespace softproj {

RecursiveProjector RecursiveProjector::init(const Matrix& H, const Matrix& W, double epsilon)
{
    if (H.cols() == 0 || H.rows() == 0) {
        throw InsufficientDataError("RecursiveProjector::init: empty data matrix");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ParameterError("RecursiveProjector::init: epsilon must be positive");
    }
    RecursiveProjector s;
    s.epsilon_ = epsilon;
    s.gram_ = kernels::gram(H);
    s.trace_ = H.squaredNorm();
    if (!(s.trace_ > 0.0)) {
        throw InsufficientDataError("RecursiveProjector::init: data matrix is identically zero");
    }
    s.projector_ = soft_projector_from_gram(s.gram_, W, epsilon * s.trace_);
    return s;
}

RecursiveProjector RecursiveProjector::init(const DataMatrix& data, const Matrix& W, double epsilon)
{
    return init(data.permuted(), W, epsilon);
}

void RecursiveProjector::update(const Vector& w_new)
{
    const Index n = projector_.dim();
    if (w_new.size() != n) {
        throw DimensionError("RecursiveProjector::update: trajectory length " + std::to_string(w_new.size()) +
                             " != " + std::to_string(n));
    }
    const Matrix& W = projector_.W;
    const double delta_prev = projector_.delta;

    const Vector w_tilde = w_new - projector_.P * (W * w_new);
    const double gamma = 1.0 + w_tilde.dot(W * w_new) / delta_prev;
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw NumericalIntegrityError("RecursiveProjector::update: gamma_t = " + std::to_string(gamma) +
                                      " is not positive; projector cache is corrupted");
    }
    const double scale = 1.0 / (gamma * delta_prev);
    projector_.P.noalias() += scale * w_tilde * w_tilde.transpose();
    projector_.gram_inv_cache.noalias() -= scale * w_tilde * w_tilde.transpose();
    projector_.P = linalg::symmetrize(projector_.P);
    projector_.gram_inv_cache = linalg::symmetrize(projector_.gram_inv_cache);

    gram_.noalias() += w_new * w_new.transpose();
    const double energy = w_new.squaredNorm();
    trace_ += energy;
    if (!frozen_) {
        projector_.delta = delta_prev + epsilon_ * energy;
    }
    ++t_;
}

void RecursiveProjector::rebase()
{
    projector_ = soft_projector_from_gram(gram_, projector_.W, projector_.delta);
}

double RecursiveProjector::drift() const
{
    const SoftProjector batch = soft_projector_from_gram(gram_, projector_.W, projector_.delta);
    const double ref = batch.P.norm();
    return (projector_.P - batch.P).norm() / (ref > 0.0 ? ref : 1.0);
}

double RecursiveProjector::gram_sigma_min() const
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues()(0));
}

void RecursiveProjector::save(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    csv::write_matrix(dir / "P.csv", projector_.P);
    csv::write_matrix(dir / "W.csv", projector_.W);
    csv::write_matrix(dir / "gram.csv", gram_);
    csv::write_matrix(dir / "cache.csv", projector_.gram_inv_cache);
    csv::Table scalars({"name", "value"});
    scalars.row(std::vector<std::string>{"delta_t", csv::format_double(projector_.delta)});
    scalars.row(std::vector<std::string>{"epsilon", csv::format_double(epsilon_)});
    scalars.row(std::vector<std::string>{"trace", csv::format_double(trace_)});
    scalars.row(std::vector<std::string>{"t", std::to_string(t_)});
    scalars.row(std::vector<std::string>{"frozen", frozen_ ? "1" : "0"});
    scalars.save(dir / "scalars.csv");
}

RecursiveProjector RecursiveProjector::load(const std::filesystem::path& dir)
{
    auto [header, rows] = csv::read_table(dir / "scalars.csv");
    std::map<std::string, std::string> kv;
    for (const auto& r : rows) {
        kv[r.at(0)] = r.at(1);
    }
    for (const char* key : {"delta_t", "epsilon", "trace", "t", "frozen"}) {
        if (!kv.count(key)) {
            throw IoError(std::string("RecursiveProjector::load: missing scalar ") + key);
        }
    }
    RecursiveProjector s;
    s.projector_.P = csv::read_matrix(dir / "P.csv");
    s.projector_.W = csv::read_matrix(dir / "W.csv");
    s.projector_.W_inv = linalg::spd_inverse(s.projector_.W);
    s.projector_.gram_inv_cache = csv::read_matrix(dir / "cache.csv");
    s.projector_.delta = csv::parse_double(kv["delta_t"]);
    s.gram_ = csv::read_matrix(dir / "gram.csv");
    s.epsilon_ = csv::parse_double(kv["epsilon"]);
    s.trace_ = csv::parse_double(kv["trace"]);
    s.t_ = std::stol(kv["t"]);
    s.frozen_ = kv["frozen"] == "1";
    const Index n = s.projector_.P.rows();
    if (s.projector_.P.cols() != n || s.projector_.W.rows() != n || s.gram_.rows() != n ||
        s.projector_.gram_inv_cache.rows() != n) {
        throw DimensionError("RecursiveProjector::load: checkpoint matrices are not conformal");
    }
    return s;
}

}  // namespace softproj
