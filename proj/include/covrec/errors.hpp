#pragma once

#include <stdexcept>
#include <string>

namespace covrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Empty, point-like or zero-area input where a body is required.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Surface area measure that no convex polygon realizes.
class InfeasibleMeasure : public Error {
public:
    using Error::Error;
};

/// Body leaves the unit box C0 = [-1/2, 1/2]^2.
class BodyOutOfBox : public Error {
public:
    using Error::Error;
};

/// Parameter window violation or inconsistent configuration.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Payload size or index range does not match its metadata.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage produced no usable body.
class ReconstructionFailure : public Error {
public:
    ReconstructionFailure(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace covrec
