#include "latentstitch/error.hpp"

namespace latentstitch {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::NotPSD: return "NotPSD";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::BadDims: return "BadDims";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::ZeroBaseline: return "ZeroBaseline";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::Undecodable: return "Undecodable";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::UnknownValue: return "UnknownValue";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::EmptyIntersection: return "EmptyIntersection";
        case ErrorCode::InsufficientRows: return "InsufficientRows";
        case ErrorCode::SingleClassPool: return "SingleClassPool";
        case ErrorCode::InconsistentIds: return "InconsistentIds";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ConfigError:
            return 1;
        case ErrorCode::NotSPD:
        case ErrorCode::NotPSD:
        case ErrorCode::NotSymmetric:
        case ErrorCode::NoConvergence:
            return 3;
        default:
            return 2;
    }
}

}  // namespace latentstitch
