#pragma once

#include <stdexcept>
#include <string>

namespace dstg {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform to a primitive's algebraic rule.
struct ShapeError : Error {
    using Error::Error;
};

// Bad input data, files, or configuration. CLI exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

// Non-finite values or failed numerical checks. CLI exit code 2.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace dstg
