#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace viewforge {

enum class ErrorCode {
    MissingProperty,
    MalformedFile,
    EmptyScene,
    UnsupportedCameraModel,
    PoseCountMismatch,
    ResolutionTooSmall,
    DegenerateBounds,
    EmptyGrid,
    DegenerateLookAt,
    NoReferenceAvailable,
    InsufficientNeighbors,
    InsufficientFrames,
    ShapeMismatch,
    MissingPrerequisite,
    ConfigParse,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit path) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace viewforge
