#pragma once

#include <stdexcept>
#include <string>

namespace nomafl {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericalOverflow : public Error {
public:
    using Error::Error;
};

// Raised by aggregation when every device was rejected or unscheduled.
class NoParticipants : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

}  // namespace nomafl
