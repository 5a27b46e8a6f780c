#pragma once

#include <stdexcept>
#include <string>

namespace semimart {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument value (negative epsilon, level mismatch, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Operation called outside its domain (non-stopping time, unnormalized process, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Objects living on different filtered spaces.
class StructuralError : public Error {
public:
    using Error::Error;
};

// A construction produced data violating its type invariant.
class InvariantError : public Error {
public:
    using Error::Error;
};

class ResourceLimitError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Malformed input file. `field()` is a JSON-pointer style path to the offending value.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace semimart
