#pragma once

#include <stdexcept>
#include <string>

namespace cwnn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (dimension mismatch,
/// out-of-range parameter, empty input).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or a coefficient beyond the
/// divergence guard. Usually means the learning rate is too large.
class NumericError : public Error {
public:
    NumericError(const std::string& what, long iteration)
        : Error(what), iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// Refinement did not reach the requested tolerance. Both of the last two
/// estimates are kept so callers can judge how far off they are.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double coarse, double fine)
        : Error(what), coarse_(coarse), fine_(fine) {}
    double coarse() const noexcept { return coarse_; }
    double fine() const noexcept { return fine_; }

private:
    double coarse_;
    double fine_;
};

/// Malformed input file: missing column, non-numeric cell, constant column.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cwnn
