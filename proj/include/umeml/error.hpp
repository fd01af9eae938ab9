#ifndef UMEML_ERROR_HPP
#define UMEML_ERROR_HPP

#include <stdexcept>
#include <string>

namespace umeml {

enum class ErrorKind {
    invalid_argument,  // bad value passed by caller
    dimension,         // tensor shape mismatch
    io,                // filesystem failure
    format,            // malformed on-disk data
    runtime,           // anything else (non-finite loss, degenerate input, ...)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace umeml

#endif
