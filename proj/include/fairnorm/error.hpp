#pragma once

#include <stdexcept>
#include <string>

namespace fairnorm {

/// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed input files, inconsistent datasets, bad references.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Degenerate numeric situations: zero-norm vectors, empty score sets, zero baselines.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Invalid parameters supplied by the caller.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Prefix an error message with context while keeping its kind.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace fairnorm
