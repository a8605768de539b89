#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace poscert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Dimension mismatch, non-finite data, malformed matrices.
class StructuralError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "structural"; }
};

/// Argument outside the mathematical domain of an operation (t < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// A model parameter violates one of its constraints. `constraint()` names it.
class ParameterError : public Error {
public:
    ParameterError(std::string constraint, const std::string& detail)
        : Error("parameter constraint violated: " + constraint + (detail.empty() ? "" : " (" + detail + ")")),
          constraint_(std::move(constraint)) {}
    const char* kind() const noexcept override { return "parameter"; }
    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

/// A sampled state lies on the cone boundary (z_i = 0) with f_i(z) < 0:
/// no finite shift can repair it.
struct Violation {
    std::vector<double> state;
    std::size_t component = 0;
    double value = 0.0;   // f_i(z,t) + lambda * z_i
    double time = 0.0;
};

class CertificationFailure : public Error {
public:
    CertificationFailure(const std::string& what, Violation v) : Error(what), violation_(std::move(v)) {}
    const char* kind() const noexcept override { return "uncertifiable"; }
    const Violation& violation() const noexcept { return violation_; }

private:
    Violation violation_;
};

/// The integrand f(y,t) + lambda*y of the shifted mild formulation went negative
/// on a realized state: the shift in use is too small for that state.
class CertificationMismatch : public Error {
public:
    CertificationMismatch(const std::string& what, std::size_t component, double value, double required_shift)
        : Error(what), component_(component), value_(value), required_shift_(required_shift) {}
    const char* kind() const noexcept override { return "certification_mismatch"; }
    std::size_t component() const noexcept { return component_; }
    double value() const noexcept { return value_; }
    /// Smallest shift that would make the offending entry nonnegative.
    double required_shift() const noexcept { return required_shift_; }

private:
    std::size_t component_;
    double value_;
    double required_shift_;
};

class IterationFailure : public Error {
public:
    IterationFailure(const std::string& what, double last_residual) : Error(what), last_residual_(last_residual) {}
    const char* kind() const noexcept override { return "iteration"; }
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

class PositivityFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "positivity"; }
};

}  // namespace poscert
