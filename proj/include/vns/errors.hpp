#pragma once

#include <stdexcept>
#include <string>

namespace vns {

/// Bad run configuration (grid/profile mismatch, unknown family, ...).
/// CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Operation called outside its contract (scalar where vector expected,
/// negative time, exponent out of range, ...).
struct usage_error : std::invalid_argument {
    explicit usage_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Inconsistent or sign-violating data handed to a diagnostic.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf or blow-up detected mid-run. CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct internal_error : std::logic_error {
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

} // namespace vns
