#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hlob {

// Root of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument value or out-of-range index.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Spectral radius of the branching matrix is not below one.
class StationarityError : public Error {
public:
    using Error::Error;
};

class ErgodicityError : public Error {
public:
    using Error::Error;
};

// A model collapses to something the formula cannot handle (zero volatility, p + p' = 2, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NoSolutionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double gradient_norm)
        : Error(what), gradient_norm_(gradient_norm) {}

    [[nodiscard]] double gradient_norm() const noexcept { return gradient_norm_; }

private:
    double gradient_norm_;
};

// Malformed input text. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a data invariant (unsorted times, unknown dims).
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace hlob
