#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clstm {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Bad argument value (ranges, empty inputs, unknown names).
struct ArgumentError : Error {
    using Error::Error;
};

// Index outside a valid range.
struct IndexError : Error {
    using Error::Error;
};

// Text that does not parse; carries the byte offset of the failure.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& what, std::size_t off)
        : Error(what + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Malformed binary file; carries the file offset of the failure.
struct FormatError : Error {
    std::size_t offset;
    FormatError(const std::string& what, std::size_t off)
        : Error(what + " (at file offset " + std::to_string(off) + ")"), offset(off) {}
};

// File system / stream failures.
struct IoError : Error {
    using Error::Error;
};

// Training diverged (NaN/inf loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace clstm
