#pragma once

#include <stdexcept>
#include <string>

namespace sparsepath {

// Complete/quasi-complete separation: the GLM likelihood is unbounded along
// the current trajectory and no finite optimum exists.
class SeparationError : public std::runtime_error {
public:
    explicit SeparationError(const std::string& what) : std::runtime_error(what) {}
};

// Restricted Hessian could not be factorized (or has a pivot below the
// singularity tolerance) where a solve was required.
class SingularHessianError : public std::runtime_error {
public:
    explicit SingularHessianError(const std::string& what) : std::runtime_error(what) {}
};

// Regularization matrix rows are linearly dependent.
class RankDeficientError : public std::runtime_error {
public:
    explicit RankDeficientError(const std::string& what) : std::runtime_error(what) {}
};

// CSV / config input is malformed. row/col are 1-based; 0 means "not applicable".
class InputError : public std::runtime_error {
public:
    InputError(const std::string& what, long row = 0, long col = 0)
        : std::runtime_error(what), row(row), col(col) {}
    long row;
    long col;
};

}  // namespace sparsepath
