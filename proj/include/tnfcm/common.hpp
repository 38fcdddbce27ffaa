#pragma once

#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace tnfcm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (corpus files, candidate files).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Binary container problems: bad magic, unsupported version, truncation.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Raised when a pre-normalization embedding has (near) zero length.
class DegenerateEmbeddingError : public Error {
public:
    using Error::Error;
};

/// A category pair that has no trained relation vector.
class UnknownRelationError : public Error {
public:
    UnknownRelationError(std::string head, std::string tail)
        : Error("unknown relation (" + head + ", " + tail + ")"),
          head_(std::move(head)),
          tail_(std::move(tail)) {}

    const std::string& head() const noexcept { return head_; }
    const std::string& tail() const noexcept { return tail_; }

private:
    std::string head_;
    std::string tail_;
};

/// NaN or infinity found in gradients or parameters.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Shapes of vectors or tensors disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream os;
    (os << ... << std::forward<Args>(args));
    return os.str();
}

}  // namespace detail

enum class LogLevel { debug = 0, info = 1, warning = 2, error = 3, quiet = 4 };

inline LogLevel& log_threshold() {
    static LogLevel level = LogLevel::info;
    return level;
}

/// Logs go to standard error; machine output is only ever written to files.
template <typename... Args>
void log(LogLevel level, Args&&... args) {
    if (level < log_threshold()) return;
    static constexpr const char* kTags[] = {"debug", "info", "warning", "error"};
    std::cerr << "[tnfcm " << kTags[static_cast<int>(level)] << "] "
              << detail::concat(std::forward<Args>(args)...) << '\n';
}

}  // namespace tnfcm
