#pragma once

#include <stdexcept>
#include <string>

namespace nvmlens {

// Base class for all toolkit failures. CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (bad row, bad token). Carries a 1-based line number
// when the failure is attributable to one.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input that violates a format rule (unknown enum value,
// out-of-range field, inconsistent schema).
class FormatError : public Error {
public:
    using Error::Error;
};

// Data that parses but breaks an integrity invariant (non-monotone counter,
// mode/content mismatch, window outside the sampled span).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// An argument outside an operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Not enough data to perform the computation (too few samples, empty window).
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

} // namespace nvmlens
