#pragma once

#include <stdexcept>
#include <string>

namespace cfn {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible matrix / vector / layer dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// NaN or Inf surfaced where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Invalid argument values (bad distribution parameters, out-of-range labels, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// File read/write failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Unknown node kind requested from the serialization registry.
class RegistryError : public Error {
public:
    using Error::Error;
};

// Model file format version not supported by this build.
class VersionError : public Error {
public:
    using Error::Error;
};

// API misuse (duplicate registration, mismatched forward/backward cache, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace cfn
