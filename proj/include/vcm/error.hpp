#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace vcm {

/// Log of zero. Returned wherever a density vanishes instead of throwing.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid settings (quadrature order, bounds, sampler config, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data failing validation (series too short, D > N, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite intermediate in a numerical routine. The message carries the
/// inputs that produced it.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries 1-based row and column when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int row = 0, int column = 0)
        : std::runtime_error(what), row_(row), column_(column) {}
    int row() const noexcept { return row_; }
    int column() const noexcept { return column_; }

private:
    int row_;
    int column_;
};

}  // namespace vcm
