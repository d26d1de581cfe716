#pragma once

#include <stdexcept>
#include <string>

namespace snsmart {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument to a numeric routine (non-finite shape, value outside
// the support, probability outside [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input text: a CSV row or JSON document that cannot be decoded.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input whose values violate a data invariant
// (e.g. a first-stage responder switching treatments).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Bad run configuration (sample size not divisible by 3, empty method
// list, unknown scenario id, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A numeric algorithm failed to converge or found no usable point.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace snsmart
