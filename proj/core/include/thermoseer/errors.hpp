#pragma once

#include <stdexcept>
#include <string>

namespace thermoseer {

/// Failure categories. The CLI maps each category onto a stable exit code.
enum class ErrorKind {
    Domain,      // argument outside its valid range
    Shape,       // mismatched N, layer, or matrix dimensions
    Coverage,    // trace too short for the requested curves
    Metric,      // metric undefined for the given data (e.g. zero truth temperature)
    Numerical,   // decomposition or solve failed
    Pairing,     // prediction/truth point sets do not match
    Protocol,    // request violates the prediction protocol (e.g. layer 1)
    Horizon,     // query beyond the representable time horizon
    Config,      // configuration parse or validation failure
    Data,        // dataset file malformed or inconsistent
    Checkpoint,  // checkpoint file malformed or version mismatch
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        throw Error(kind, what);
    }
}

}  // namespace thermoseer
