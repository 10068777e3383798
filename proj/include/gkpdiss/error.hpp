#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gkpdiss {

/// Failure categories. The CLI maps these onto distinct exit codes.
enum class ErrorKind {
    invalid_dimension,
    invalid_input,
    shape,
    overflow,
    quadrature,
    degenerate_gap,
    step_underflow,
    non_convergence,
    tolerance_exceeded,
    resource,
    config,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::shape: return "shape";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::quadrature: return "quadrature-grid-too-small";
    case ErrorKind::degenerate_gap: return "degenerate-gap";
    case ErrorKind::step_underflow: return "step-size-underflow";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::tolerance_exceeded: return "tolerance-exceeded";
    case ErrorKind::resource: return "resource";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    /// what() without the kind prefix.
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

} // namespace gkpdiss
