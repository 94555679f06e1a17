#pragma once

#include <stdexcept>
#include <string>

namespace mmc {

// Base type for every failure raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape mismatch or out-of-range index/count.
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values or a numeric routine that failed to converge.
struct NumericError : Error {
    using Error::Error;
};

// Input that is numerically unusable: zero bandwidth, rank-deficient block,
// all-zero weights, and similar collapses.
struct DegenerateError : Error {
    using Error::Error;
};

// A structural rule was violated (duplicate mapping pair, disconnected
// similarity row, label out of range, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Malformed file contents or configuration.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace mmc
