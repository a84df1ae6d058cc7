#include "memaae/error.hpp"

namespace memaae {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
        case ErrorKind::Checkpoint: return "checkpoint";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Argument: return "argument";
    }
    return "unknown";
}

}  // namespace memaae
