#pragma once

#include <stdexcept>
#include <string>

namespace gesmatch {

/// Failure caused by malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure caused by invalid arguments or configuration.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gesmatch
