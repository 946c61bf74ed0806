#pragma once

#include <stdexcept>
#include <string>

namespace gptomo {

// Error kinds map one-to-one onto the CLI exit codes (see tools/gptomo.cpp).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The optimizer was started where the objective is not finite.
class InvalidStart : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: a factorization broke down or an objective became non-finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by Cholesky when a pivot is non-positive.
class IllConditioned : public NumericalError {
public:
    IllConditioned(const std::string& what, long pivot_index, double smallest_pivot)
        : NumericalError(what), pivot_index_(pivot_index), smallest_pivot_(smallest_pivot) {}

    [[nodiscard]] long pivot_index() const noexcept { return pivot_index_; }
    [[nodiscard]] double smallest_pivot() const noexcept { return smallest_pivot_; }

private:
    long pivot_index_;
    double smallest_pivot_;
};

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gptomo
