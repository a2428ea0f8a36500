#ifndef VPFLOW_LINSOLVE_HPP
#define VPFLOW_LINSOLVE_HPP

#include "vpflow/assembly.hpp"
#include "vpflow/errors.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <memory>

namespace vpflow {

/// Raised when a matrix cannot be factorised; `pivot()` is the column of the
/// original matrix at which elimination broke down.
class SingularMatrixError : public SolverError {
public:
    SingularMatrixError(const std::string& what, std::ptrdiff_t pivot) : SolverError(what), pivot_(pivot) {}
    std::ptrdiff_t pivot() const { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

/// LU factors of a square sparse matrix with threshold partial pivoting,
/// suitable for indefinite saddle-point systems. Immutable; concurrent solves
/// against one factorisation are safe.
class Factorisation {
public:
    explicit Factorisation(const Eigen::SparseMatrix<double>& matrix);
    ~Factorisation();
    Factorisation(Factorisation&&) noexcept;
    Factorisation& operator=(Factorisation&&) noexcept;
    Factorisation(const Factorisation&) = delete;
    Factorisation& operator=(const Factorisation&) = delete;

    Eigen::Index size() const { return n_; }

    /// Throws std::invalid_argument on a size mismatch.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

private:
    Eigen::Index n_ = 0;
    Eigen::SparseMatrix<double> matrix_;
    void* numeric_ = nullptr;
};

Factorisation factorise(const Eigen::SparseMatrix<double>& matrix);
Factorisation factorise(const SparseSystem& system);

Eigen::VectorXd solve(const Factorisation& factors, const Eigen::VectorXd& rhs);

} // namespace vpflow

#endif // VPFLOW_LINSOLVE_HPP
