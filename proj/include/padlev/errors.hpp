#pragma once

#include <stdexcept>
#include <string>

namespace padlev {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operands belong to different fields (p or kind differ).
class FieldMismatch : public Error {
public:
    explicit FieldMismatch(const std::string& what) : Error(what) {}
};

// Vector or matrix dimensions disagree.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// A digit outside the element's known window was required.
class PrecisionExhausted : public Error {
public:
    explicit PrecisionExhausted(const std::string& what) : Error(what) {}
};

// Inversion of an element indistinguishable from zero.
class DivisionByZero : public Error {
public:
    explicit DivisionByZero(const std::string& what) : Error(what) {}
};

// Coset refinement exceeded the configured cap.
class RefinementExplosion : public Error {
public:
    explicit RefinementExplosion(const std::string& what) : Error(what) {}
};

// Integrand has no declared behaviour on a region whose closure holds 0.
class UndefinedAtZero : public Error {
public:
    explicit UndefinedAtZero(const std::string& what) : Error(what) {}
};

// A weight singular at 0 was applied to a measure with an atom at 0.
class SingularAtZero : public Error {
public:
    explicit SingularAtZero(const std::string& what) : Error(what) {}
};

// Convolution requested for measures with density pieces.
class UnsupportedDensityConvolution : public Error {
public:
    explicit UnsupportedDensityConvolution(const std::string& what) : Error(what) {}
};

// A probability measure was required but total mass is not 1.
class NotNormalized : public Error {
public:
    explicit NotNormalized(const std::string& what) : Error(what) {}
};

// A radial sum diverges (infinite mass over the requested region).
class DivergentMass : public Error {
public:
    explicit DivergentMass(const std::string& what) : Error(what) {}
};

// The inverse-square moment of the jump measure is infinite, so the
// derivative-based recovery of drift and diffusion is unavailable.
class DivergentJ : public Error {
public:
    explicit DivergentJ(const std::string& what) : Error(what) {}
};

// An estimator was asked to average over zero samples.
class EmptySample : public Error {
public:
    explicit EmptySample(const std::string& what) : Error(what) {}
};

// Bernoulli thinning probability above 1 in a triangular-array row.
class InvalidThinning : public Error {
public:
    explicit InvalidThinning(const std::string& what) : Error(what) {}
};

// Bad constructor or function parameters (signs, ranges, modes).
class InvalidParams : public Error {
public:
    explicit InvalidParams(const std::string& what) : Error(what) {}
};

// Malformed config / serialized payload.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

} // namespace padlev
