#pragma once

#include <stdexcept>
#include <string>

namespace eps {

/// Argument outside the mathematical domain of an operation (d <= 0, f <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent inputs, e.g. waveforms with mismatched sample rates.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid or unstable configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical procedure failed (non-convergence, non-positive PSD bins, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough events/samples to compute a statistic.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File-system failures, always carrying the offending path.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace eps
