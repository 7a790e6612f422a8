#include "softproj/kernels.hpp"

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace softproj::kernels {

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Matrix gram(const Matrix& H)
{
    const Index rows = H.rows();
    const Index cols = H.cols();
    const Index blocks = (cols + kGramBlock - 1) / kGramBlock;
    if (blocks <= 1) {
        return serial::gram(H);
    }
    std::vector<Matrix> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kGramBlock;
        const Index width = std::min(kGramBlock, cols - start);
        Matrix acc = Matrix::Zero(rows, rows);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(H.middleCols(start, width));
        partial[static_cast<std::size_t>(b)] = acc;
    }
    Matrix out = Matrix::Zero(rows, rows);
    for (const auto& p : partial) {
        out += p;
    }
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose().eval();
    return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body)
{
    if (jobs <= 1 || count <= 1) {
        serial::parallel_for(count, body);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (long long i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

namespace serial {

Matrix gram(const Matrix& H)
{
    const Index rows = H.rows();
    const Index cols = H.cols();
    Matrix out = Matrix::Zero(rows, rows);
    for (Index start = 0; start < cols; start += kGramBlock) {
        const Index width = std::min(kGramBlock, cols - start);
        Matrix acc = Matrix::Zero(rows, rows);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(H.middleCols(start, width));
        out += acc;
    }
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose().eval();
    return out;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body)
{
    for (std::size_t i = 0; i < count; ++i) {
        body(i);
    }
}

}  // namespace serial
}  // namespace softproj::kernels
