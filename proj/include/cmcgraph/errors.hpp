#pragma once

#include <stdexcept>
#include <string>

namespace cmcgraph {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent user configuration (names, ranges, file fields).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Metric evaluated to a non-symmetric-positive-definite matrix.
class NonPositiveDefiniteMetric : public Error {
public:
    using Error::Error;
};

// Mesh generation or validation found degenerate / inconsistent simplices.
class DegenerateMesh : public Error {
public:
    using Error::Error;
};

// Mesh text file could not be parsed.
class MeshFormatError : public Error {
public:
    using Error::Error;
};

// Boundary fails the strict-convexity precondition (kappa1 <= tol).
// Callers that merely warn should inspect ConvexityReport instead of
// requesting certification.
class NotStrictlyConvex : public Error {
public:
    using Error::Error;
};

// Residual assembly produced NaN/Inf entries.
class NonFiniteResidual : public Error {
public:
    using Error::Error;
};

// Newton line search could not reduce the residual at the minimal step.
class NewtonDiverged : public Error {
public:
    using Error::Error;
};

// Sparse factorization failed or the solve did not meet its residual contract.
class LinearSolveFailed : public Error {
public:
    using Error::Error;
};

} // namespace cmcgraph
