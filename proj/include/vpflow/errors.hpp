#ifndef VPFLOW_ERRORS_HPP
#define VPFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vpflow {

/// A nonlinear or linear solve that did not produce an acceptable answer.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vpflow

#endif // VPFLOW_ERRORS_HPP
