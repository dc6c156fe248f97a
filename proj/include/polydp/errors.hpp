#pragma once

#include <stdexcept>
#include <string>

namespace polydp {

/// An operation would exceed an explicit resource cap (expansion term
/// budget, simplex vector length, enumeration size).
struct budget_exceeded : std::runtime_error {
    explicit budget_exceeded(const std::string& msg) : std::runtime_error(msg) {}
};

/// No block count satisfies the requested weight cap.
struct weight_cap_exceeded : std::runtime_error {
    explicit weight_cap_exceeded(const std::string& msg) : std::runtime_error(msg) {}
};

/// The multiplicative-weights state has already consumed its mistake cap.
struct mistake_cap_exceeded : std::runtime_error {
    explicit mistake_cap_exceeded(const std::string& msg) : std::runtime_error(msg) {}
};

/// The online mechanism was asked for more queries than its budget allows.
struct query_budget_exhausted : std::runtime_error {
    explicit query_budget_exhausted(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (database CSV, query stream, state snapshot).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace polydp
