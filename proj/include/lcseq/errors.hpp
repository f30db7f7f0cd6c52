#pragma once

#include <stdexcept>
#include <string>

namespace lcseq {

// Bad arguments or malformed input (CLI exit code 2).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Samples on which no log-concave density with a Lebesgue density exists,
// e.g. fewer than two distinct points (CLI exit code 3).
class DegenerateSampleError : public std::runtime_error {
public:
    explicit DegenerateSampleError(const std::string& what) : std::runtime_error(what) {}
};

// Internal numeric failure, e.g. an estimator returning a non-finite
// log-density on finite input (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lcseq
