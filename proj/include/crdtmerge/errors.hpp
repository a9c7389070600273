#pragma once

#include <stdexcept>

namespace crdtmerge {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatches, invalid dimensions, element-count disagreements.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or numeric arguments outside their documented range.
class ValueError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input: bad magic, truncation, trailing bytes,
/// corrupt or inconsistent payload.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Unknown strategy ids or strategy parameters outside their range.
class StrategyError : public Error {
public:
    using Error::Error;
};

/// Invalid operations on replica state, such as resolving an empty state or
/// removing content that is not visible.
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace crdtmerge
