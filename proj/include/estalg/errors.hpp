#pragma once

#include <stdexcept>
#include <string>

namespace estalg {

/// Base class for all workbench errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation hit a point outside a function's domain (division by zero,
/// log of a non-positive value, non-finite intermediate).
struct DomainError : Error {
    using Error::Error;
};

/// Symbolic metric inversion failed the residual check.
struct SingularMetric : Error {
    using Error::Error;
};

/// Diffusion coefficient matrix failed positive-definiteness sampling.
struct NonDegeneracyViolation : Error {
    using Error::Error;
};

/// A structural operator identity failed beyond tolerance; signals an
/// implementation bug rather than bad input.
struct IdentityViolation : Error {
    using Error::Error;
};

/// Observation component is constant on the chart.
struct ConstantObservation : Error {
    using Error::Error;
};

/// Triangularity or diagonal test of the compact certificate failed.
struct CertificateFailure : Error {
    using Error::Error;
};

/// No gradient flow connecting two critical points was located.
struct FlowNotFound : Error {
    using Error::Error;
};

/// Field is constant where a non-constant one is required.
struct DegenerateField : Error {
    using Error::Error;
};

/// Trajectory left a non-periodic chart box.
struct StepOutOfDomain : Error {
    using Error::Error;
};

/// Explicit time step violates the advertised stability bound.
struct StabilityViolation : Error {
    using Error::Error;
};

/// Grid density developed non-finite values.
struct NonFiniteDensity : Error {
    using Error::Error;
};

/// Density integrates to a non-positive mass.
struct ZeroMass : Error {
    using Error::Error;
};

/// Particle log-weight spread exceeded the representable range.
struct WeightCollapse : Error {
    using Error::Error;
};

/// Config file failed validation; message lists every violation.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace estalg
