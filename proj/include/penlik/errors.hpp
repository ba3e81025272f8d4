#pragma once

#include <stdexcept>
#include <string>

namespace penlik {

// Invalid user-supplied input: bad parameters, malformed files, dimension
// mismatches. Maps to CLI exit code 1.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside an otherwise valid computation: singular systems,
// non-finite intermediates. Maps to CLI exit code 2.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace penlik
