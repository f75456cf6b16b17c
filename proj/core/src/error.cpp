#include "viewforge/error.hpp"

namespace viewforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingProperty: return "MissingProperty";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::UnsupportedCameraModel: return "UnsupportedCameraModel";
    case ErrorCode::PoseCountMismatch: return "PoseCountMismatch";
    case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DegenerateLookAt: return "DegenerateLookAt";
    case ErrorCode::NoReferenceAvailable: return "NoReferenceAvailable";
    case ErrorCode::InsufficientNeighbors: return "InsufficientNeighbors";
    case ErrorCode::InsufficientFrames: return "InsufficientFrames";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace viewforge
