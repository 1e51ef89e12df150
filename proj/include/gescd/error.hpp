#pragma once

#include <stdexcept>
#include <string>

namespace gescd {

enum class ErrorCode {
    InvalidArgument,
    Range,
    Io,
    Layout,
    Pairing,
    BackendUnavailable,
    RegistrationFailure,
    EmptyMask,
    Internal,
};

/// Exception carrying a stable error code alongside the message. The C API
/// maps codes 1:1 onto gescd_status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::Range: return "range";
        case ErrorCode::Io: return "io";
        case ErrorCode::Layout: return "layout";
        case ErrorCode::Pairing: return "pairing";
        case ErrorCode::BackendUnavailable: return "backend-unavailable";
        case ErrorCode::RegistrationFailure: return "registration-failure";
        case ErrorCode::EmptyMask: return "empty-mask";
        case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace gescd
