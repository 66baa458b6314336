#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace statuterank {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Cross-file consistency failure (unknown ids, empty gold sets, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Remote endpoint unreachable or returned an unusable reply.
class TransportError : public Error {
public:
    using Error::Error;
};

} // namespace statuterank
