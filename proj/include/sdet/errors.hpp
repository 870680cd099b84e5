#pragma once

#include <stdexcept>
#include <string>

namespace sdet {

// Argument outside the advertised domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Finite input whose result is not representable in double precision.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

// Iterative or series evaluation failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Geodesic shooting found no path for the requested branch.
class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested point is not covered by a mode table.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionMismatchError : public IoError {
public:
    using IoError::IoError;
};

class ChecksumError : public IoError {
public:
    using IoError::IoError;
};

// A loaded table failed its consistency audit.
class AuditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver failure carrying the offending mode.
class ModeSolveError : public std::runtime_error {
public:
    ModeSolveError(int ell, double omega, const std::string& what)
        : std::runtime_error("mode (l=" + std::to_string(ell) + ", omega=" + std::to_string(omega) +
                             "): " + what),
          ell_(ell), omega_(omega) {}
    int ell() const { return ell_; }
    double omega() const { return omega_; }

private:
    int ell_;
    double omega_;
};

}  // namespace sdet
