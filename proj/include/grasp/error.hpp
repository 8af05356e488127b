#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace grasp {

enum class ErrorCode {
    OutOfRange,
    DegeneratePolygon,
    EmptyIntersection,
    UnsupportedExtent,
    InvalidGrid,
    IoFailure,
    FormatViolation,
    MissingBand,
    DuplicateId,
    NoScenesInWindow,
    DegenerateSamples,
    CalibrationInconsistent,
    EmptyPolygonFootprint,
    InvalidConfig,
    InvalidArgument,
    ShapeMismatch,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::UnsupportedExtent: return "UnsupportedExtent";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::FormatViolation: return "FormatViolation";
    case ErrorCode::MissingBand: return "MissingBand";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NoScenesInWindow: return "NoScenesInWindow";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::CalibrationInconsistent: return "CalibrationInconsistent";
    case ErrorCode::EmptyPolygonFootprint: return "EmptyPolygonFootprint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    }
    return "Unknown";
}

/// Every domain failure in the library is reported through this type. The
/// code is machine-readable; `detail` carries the offending name (band,
/// field, calibration class) when there is one, and `offset` the byte
/// position for container format violations.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {},
          std::optional<std::uint64_t> offset = std::nullopt)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)), offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return to_string(code_); }
    const std::string& detail() const noexcept { return detail_; }
    std::optional<std::uint64_t> offset() const noexcept { return offset_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::optional<std::uint64_t> offset_;
};

} // namespace grasp
