#pragma once

#include <stdexcept>
#include <string>

namespace memaae {

enum class ErrorKind {
    Shape,
    Domain,
    Parse,
    Config,
    Io,
    Checkpoint,
    Numeric,
    Argument,
};

const char* error_kind_name(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` drives the C API error code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace memaae
