#include "vpflow/linsolve.hpp"

#include <umfpack.h>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vpflow {

namespace {

std::array<double, UMFPACK_CONTROL> default_control()
{
    std::array<double, UMFPACK_CONTROL> control{};
    umfpack_di_defaults(control.data());
    return control;
}

// Column of the original matrix holding the first zero pivot of U.
std::ptrdiff_t zero_pivot_column(void* numeric, int n)
{
    std::vector<int> q(n);
    std::vector<double> udiag(n);
    int do_recip = 0;
    const int status = umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                                              q.data(), udiag.data(), &do_recip, nullptr, numeric);
    if (status != UMFPACK_OK) {
        return -1;
    }
    for (int k = 0; k < n; ++k) {
        if (udiag[k] == 0.0 || !std::isfinite(udiag[k])) {
            return q[k];
        }
    }
    return -1;
}

} // namespace

Factorisation::Factorisation(const Eigen::SparseMatrix<double>& matrix)
{
    if (matrix.rows() != matrix.cols()) {
        throw std::invalid_argument("factorise: matrix is not square");
    }
    n_ = matrix.rows();
    matrix_ = matrix;
    matrix_.makeCompressed();
    const int n = static_cast<int>(n_);
    const int* cp = matrix_.outerIndexPtr();
    const int* ri = matrix_.innerIndexPtr();
    const double* vals = matrix_.valuePtr();
    const auto control = default_control();
    std::array<double, UMFPACK_INFO> info{};

    void* symbolic = nullptr;
    int status = umfpack_di_symbolic(n, n, cp, ri, vals, &symbolic, control.data(), info.data());
    if (status != UMFPACK_OK) {
        umfpack_di_free_symbolic(&symbolic);
        throw SolverError("factorise: symbolic analysis failed (status " + std::to_string(status) + ")");
    }
    status = umfpack_di_numeric(cp, ri, vals, symbolic, &numeric_, control.data(), info.data());
    umfpack_di_free_symbolic(&symbolic);
    if (status == UMFPACK_WARNING_singular_matrix) {
        const auto pivot = zero_pivot_column(numeric_, n);
        umfpack_di_free_numeric(&numeric_);
        throw SingularMatrixError("factorise: matrix is singular at column " + std::to_string(pivot), pivot);
    }
    if (status != UMFPACK_OK) {
        umfpack_di_free_numeric(&numeric_);
        throw SolverError("factorise: numeric factorisation failed (status " + std::to_string(status) + ")");
    }
}

Factorisation::~Factorisation()
{
    if (numeric_) {
        umfpack_di_free_numeric(&numeric_);
    }
}

Factorisation::Factorisation(Factorisation&& other) noexcept
    : n_(other.n_), matrix_(std::move(other.matrix_)), numeric_(std::exchange(other.numeric_, nullptr))
{
}

Factorisation& Factorisation::operator=(Factorisation&& other) noexcept
{
    if (this != &other) {
        if (numeric_) {
            umfpack_di_free_numeric(&numeric_);
        }
        n_ = other.n_;
        matrix_ = std::move(other.matrix_);
        numeric_ = std::exchange(other.numeric_, nullptr);
    }
    return *this;
}

Eigen::VectorXd Factorisation::solve(const Eigen::VectorXd& rhs) const
{
    if (rhs.size() != n_) {
        throw std::invalid_argument("solve: right-hand side has size " + std::to_string(rhs.size()) +
                                    ", expected " + std::to_string(n_));
    }
    if (!numeric_) {
        throw std::logic_error("solve: factorisation has been moved from");
    }
    Eigen::VectorXd x(n_);
    // Per-call control/info arrays keep concurrent solves independent.
    auto control = default_control();
    control[UMFPACK_IRSTEP] = 2;
    std::array<double, UMFPACK_INFO> info{};
    const int status = umfpack_di_solve(UMFPACK_A, matrix_.outerIndexPtr(), matrix_.innerIndexPtr(),
                                        matrix_.valuePtr(), x.data(), rhs.data(), numeric_, control.data(),
                                        info.data());
    if (status != UMFPACK_OK) {
        throw SolverError("solve: back substitution failed (status " + std::to_string(status) + ")");
    }
    return x;
}

Factorisation factorise(const Eigen::SparseMatrix<double>& matrix) { return Factorisation(matrix); }

Factorisation factorise(const SparseSystem& system) { return Factorisation(system.matrix); }

Eigen::VectorXd solve(const Factorisation& factors, const Eigen::VectorXd& rhs) { return factors.solve(rhs); }

} // namespace vpflow
