#pragma once

#include <stdexcept>
#include <string>

namespace dynclean {

/// Base class of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid tunables or invalid user-supplied parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable, missing or malformed input data.
class InputError : public Error {
public:
    using Error::Error;
};

/// Geometry could not be estimated from the supplied matches.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Output could not be written.
class OutputError : public Error {
public:
    using Error::Error;
};

} // namespace dynclean
