#pragma once

#include <stdexcept>
#include <string>

namespace softproj {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be symmetric positive definite is not.
class DefinitenessError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Raised when an internal invariant of a recursive update is broken
/// (e.g. a non-positive Sherman-Morrison denominator).
class NumericalIntegrityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace softproj
