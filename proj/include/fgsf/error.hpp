#pragma once

#include <stdexcept>
#include <string>

namespace fgsf {

enum class ErrorKind {
    DimMismatch,
    InvalidArgument,
    NonFinite,
    BadMagic,
    VersionMismatch,
    TruncatedPayload,
    Io,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace fgsf
