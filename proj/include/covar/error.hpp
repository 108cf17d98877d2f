// Error hierarchy. The CLI maps each class to a fixed process exit code.
#pragma once

#include <stdexcept>
#include <string>

#include "covar/types.hpp"

namespace covar {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or invalid argument values (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data: bad files, shape mismatches (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numeric failure: divergence, degenerate inputs (exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Shape mismatch carrying both operand shapes.
class ShapeError : public DataError {
public:
    ShapeError(const std::string& context, Index lhs_rows, Index lhs_cols,
               Index rhs_rows, Index rhs_cols)
        : DataError(context + ": shape mismatch, lhs is " + std::to_string(lhs_rows) +
                    "x" + std::to_string(lhs_cols) + ", rhs is " + std::to_string(rhs_rows) +
                    "x" + std::to_string(rhs_cols)),
          lhs_rows(lhs_rows), lhs_cols(lhs_cols), rhs_rows(rhs_rows), rhs_cols(rhs_cols) {}

    Index lhs_rows, lhs_cols, rhs_rows, rhs_cols;
};

} // namespace covar
