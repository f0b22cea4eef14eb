#pragma once

#include <stdexcept>
#include <string>

namespace ciconv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated encoded image data.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Input data violating a precondition (non-finite values, shape mismatch, empty image).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Parameter outside its admissible range (sigma, bins, kernel width).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A pipeline stage produced a non-finite intermediate. `stage()` names it.
class InternalError : public Error {
public:
    InternalError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace ciconv
