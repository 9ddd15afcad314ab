#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace jmlh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A class label is outside the label space.
class LabelError : public Error {
public:
    using Error::Error;
};

/// A non-finite loss or gradient showed up during optimization.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Inconsistent model, variant, estimator or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid user input (infeasible split counts, empty query sets, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// An enumeration-based oracle was asked for a code space it cannot hold.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file. Carries the byte offset where decoding stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace jmlh
