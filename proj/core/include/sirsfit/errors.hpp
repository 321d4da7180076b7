#pragma once

#include <stdexcept>
#include <string>

namespace sirs {

// Bad arguments, malformed files, violated preconditions. CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, solver breakdown. CLI maps this to exit code 1.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sirs
