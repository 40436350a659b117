#pragma once

#include <stdexcept>
#include <string>

namespace activeseg {

// Error taxonomy shared by every module. All derive from std::runtime_error or
// std::invalid_argument so callers can catch broadly.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Raised when a loss or a batch sampler sees no annotated voxels.
class EmptyAnnotationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExhaustedPoolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedMetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace activeseg
